//! Brute-force reference solvers for small or planar instances, independent
//! of the slice LP/MILP machinery.

use std::f64::consts::PI;

use hyperfit_lp::{solve_lp, SolveStatus};
use num_traits::One;

use crate::criteria::Criterion;
use crate::error::{invalid, Error, Result};
use crate::exponent::pow_rational;
use crate::geometry::{dual_norm, Dataset, NormSpec};
use crate::omp1d::solve_omp;
use crate::solvers::formulation::fixed_order_lp;
use crate::solvers::{centred, check_sizes, finish, slices_for, uncentre, FitResult, SolverTag};

/// Search grid for [`brute_force_fit_2d`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Grid cells over the direction range.
    pub steps: usize,
    /// Slope range for vertical residuals; defaults to the steepest slope
    /// between two points or pairwise midpoints (which contains a `p = 1`
    /// optimum).
    pub slope_range: Option<(f64, f64)>,
    /// Refine once around the best cell.
    pub refine: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { steps: 3_600, slope_range: None, refine: true }
    }
}

/// Planar fit by enumerating directions on a grid; for each direction the
/// offset is a 1-D ordered-median problem solved exactly. The result's
/// `bounds` hold a certified lower bound and the value found.
pub fn brute_force_fit_2d(
    dataset: &Dataset,
    criterion: &Criterion,
    norm: &NormSpec,
    grid: &GridSpec,
) -> Result<FitResult> {
    check_sizes(dataset, criterion)?;
    if dataset.dim() != 2 {
        return Err(Error::UnsupportedDimension { dim: dataset.dim(), reason: "grid oracle is planar".into() });
    }
    if grid.steps < 2 {
        return Err(invalid("grid needs at least two steps"));
    }
    let (data, centre) = centred(dataset);
    let xs = data.column(0);
    let ys = data.column(1);
    let n = xs.len();
    let mut values = vec![0.0; n];

    // objective for a direction parameter, and the matching β
    let vertical = matches!(norm, NormSpec::Vertical);
    let mut eval = |t: f64| -> Result<(f64, Vec<f64>)> {
        if vertical {
            for i in 0..n {
                values[i] = ys[i] - t * xs[i];
            }
            let o = solve_omp(&values, criterion)?;
            Ok((o.value, vec![o.beta0, t, -1.0]))
        } else {
            let u = [t.cos(), t.sin()];
            let dual = dual_norm(&u, norm)?;
            for i in 0..n {
                values[i] = -(u[0] * xs[i] + u[1] * ys[i]);
            }
            let o = solve_omp(&values, criterion)?;
            Ok((o.value / pow_rational(dual, criterion.power()), vec![-o.beta0, u[0], u[1]]))
        }
    };

    let (lo, hi) = if vertical {
        match grid.slope_range {
            Some(r) => r,
            None => {
                let s = steepest_centre_slope(&xs, &ys);
                (-s, s)
            }
        }
    } else {
        (0.0, PI)
    };
    let step = (hi - lo) / grid.steps as f64;
    let mut best = (f64::INFINITY, Vec::new(), lo);
    for k in 0..=grid.steps {
        let t = lo + step * k as f64;
        let (v, b) = eval(t)?;
        if v < best.0 {
            best = (v, b, t);
        }
    }
    let coarse = best.0;
    if grid.refine {
        let centre_t = best.2;
        let fine = 2.0 * step / grid.steps as f64;
        for k in 0..=grid.steps {
            let t = centre_t - step + fine * k as f64;
            let (v, b) = eval(t)?;
            if v < best.0 {
                best = (v, b, t);
            }
        }
    }

    // Every optimum lies within half a cell of a grid direction; moving to
    // that direction raises each residual by at most `delta`.
    let (delta, max_resid) = if vertical {
        let xr = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let slope_max = lo.abs().max(hi.abs());
        let (ylo, yhi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| (a.min(y), b.max(y)));
        (0.5 * step * xr, (yhi - ylo) + 2.0 * slope_max * xr)
    } else {
        let (m_lo, m_hi) = unit_circle_range(norm)?;
        let mut diam_n: f64 = 0.0;
        let mut diam_2: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let v = [xs[i] - xs[j], ys[i] - ys[j]];
                diam_n = diam_n.max(norm.norm(&v)?);
                diam_2 = diam_2.max(v[0].hypot(v[1]));
            }
        }
        (0.5 * step * m_hi * (diam_n / m_lo + diam_2), diam_n)
    };
    let p = criterion.p();
    let lambda_sum: f64 = criterion.lambda().iter().sum();
    let slack = if criterion.power().is_one() {
        lambda_sum * delta
    } else {
        lambda_sum * p * (max_resid + delta).powf(p - 1.0) * delta
    };

    let mut result =
        finish(dataset, criterion, norm, uncentre(best.1, &centre), SolverTag::Oracle, 2 * grid.steps + 2)?;
    result.bounds = Some(((coarse - slack).max(0.0), result.phi));
    Ok(result)
}

/// Smallest and largest value of the norm on the Euclidean unit circle.
fn unit_circle_range(norm: &NormSpec) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for k in 0..3600 {
        let a = 2.0 * PI * k as f64 / 3600.0;
        let v = norm.norm(&[a.cos(), a.sin()])?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    // pad for the sampling gap (norms are Lipschitz with constant `hi`)
    let pad = hi * 2.0 * PI / 3600.0;
    Ok(((lo - pad).max(lo * 0.5), hi + pad))
}

fn steepest_centre_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let mut centres: Vec<(f64, f64)> = (0..n).map(|i| (xs[i], ys[i])).collect();
    for i in 0..n {
        for j in i + 1..n {
            centres.push(((xs[i] + xs[j]) / 2.0, (ys[i] + ys[j]) / 2.0));
        }
    }
    let spread = xs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1e-300);
    let mut s: f64 = 0.0;
    for a in &centres {
        for b in &centres {
            let dx = b.0 - a.0;
            if dx.abs() > 1e-12 * spread {
                s = s.max(((b.1 - a.1) / dx).abs());
            }
        }
    }
    s * (1.0 + 1e-9)
}

/// Exact `p = 1` optimum by minimizing, over every residual order and every
/// slice, an LP with that order imposed. Factorial cost: `n ≤ 7`.
pub fn permutation_oracle(dataset: &Dataset, criterion: &Criterion, norm: &NormSpec) -> Result<FitResult> {
    check_sizes(dataset, criterion)?;
    let n = dataset.len();
    if n > 7 {
        return Err(invalid("permutation oracle is limited to n ≤ 7"));
    }
    if !criterion.power().is_one() {
        return Err(Error::Unsupported("permutation oracle needs p = 1".into()));
    }
    let (data, centre) = centred(dataset);
    let (slices, _) = slices_for(norm, dataset.dim())?;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut lps = 0;
    for slice in &slices {
        let sd = slice.features(&data);
        let mut order: Vec<usize> = (0..n).collect();
        loop {
            lps += 1;
            let model = fixed_order_lp(slice, &sd, &order, criterion.lambda())?;
            if let SolveStatus::Optimal(sol) = solve_lp(model.mip.lp())? {
                if best.as_ref().is_none_or(|(v, _)| sol.objective < *v) {
                    let (b0, theta) = model.extract(&sol.x);
                    best = Some((sol.objective, slice.beta(b0, &theta)));
                }
            }
            if !next_permutation(&mut order) {
                break;
            }
        }
    }
    let (_, beta) = best.ok_or_else(|| Error::Solver("no feasible order".into()))?;
    finish(dataset, criterion, norm, uncentre(beta, &centre), SolverTag::Oracle, lps)
}

fn next_permutation(v: &mut [usize]) -> bool {
    let Some(i) = (1..v.len()).rev().find(|&i| v[i - 1] < v[i]) else { return false };
    let j = (i..v.len()).rev().find(|&j| v[j] > v[i - 1]).expect("pivot has a successor");
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

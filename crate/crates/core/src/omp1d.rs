//! One-dimensional ordered-median points and the GCoD index.
//!
//! `f(β_0) = Σ_j λ_j |a − β_0|_(j)^p` is minimized over a finite candidate
//! set: the data values, all pairwise midpoints (where residual orderings
//! change) and, for `p > 1`, the stationary points of `f` between
//! consecutive breakpoints.

use crate::criteria::Criterion;
use crate::error::{invalid, Error, Result};
use crate::exponent::pow_rational;
use crate::geometry::{kappa, Dataset, NormSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmpSolution {
    pub beta0: f64,
    pub value: f64,
    pub candidates: usize,
}

/// `f(β_0)` for the given criterion.
pub fn objective(values: &[f64], criterion: &Criterion, beta0: f64) -> f64 {
    let mut buf: Vec<f64> = values.iter().map(|a| (a - beta0).abs()).collect();
    criterion.evaluate_in_place(&mut buf)
}

fn derivative(values: &[f64], criterion: &Criterion, beta0: f64, buf: &mut Vec<(f64, f64)>) -> f64 {
    buf.clear();
    buf.extend(values.iter().map(|a| ((a - beta0).abs(), (beta0 - a).signum())));
    buf.sort_unstable_by(|x, y| x.0.total_cmp(&y.0));
    let p = criterion.p();
    criterion
        .lambda()
        .iter()
        .zip(buf.iter())
        .filter(|(l, _)| **l != 0.0)
        .map(|(l, (r, s))| l * p * r.powf(p - 1.0) * s)
        .sum()
}

fn check(values: &[f64], criterion: &Criterion) -> Result<()> {
    if values.is_empty() {
        return Err(invalid("no values"));
    }
    if values.len() != criterion.len() {
        return Err(invalid(format!("{} values for a criterion of length {}", values.len(), criterion.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite value"));
    }
    Ok(())
}

fn breakpoints(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v.dedup();
    let mut pts = v.clone();
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            pts.push(0.5 * (v[i] + v[j]));
        }
    }
    pts.sort_unstable_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Bisection for a sign change of `f'` on `[lo, hi]`.
fn bisect(values: &[f64], c: &Criterion, mut lo: f64, mut hi: f64, buf: &mut Vec<(f64, f64)>) -> f64 {
    let mut dlo = derivative(values, c, lo, buf);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let dm = derivative(values, c, mid, buf);
        if (dm < 0.0) == (dlo < 0.0) && dm != 0.0 {
            lo = mid;
            dlo = dm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Candidate minimizers of `f`; always contains a global minimizer.
pub fn candidate_set(values: &[f64], criterion: &Criterion) -> Result<Vec<f64>> {
    check(values, criterion)?;
    let mut cands = breakpoints(values);
    if criterion.power() > num_traits::One::one() {
        let mut buf = Vec::with_capacity(values.len());
        let bps = cands.clone();
        for w in bps.windows(2) {
            let (a, b) = (w[0], w[1]);
            // sample the open interval so multiple sign changes are caught
            const SAMPLES: usize = 4;
            let grid: Vec<f64> =
                (0..=SAMPLES).map(|k| a + (b - a) * (k as f64 / SAMPLES as f64).clamp(1e-9, 1.0 - 1e-9)).collect();
            let ders: Vec<f64> = grid.iter().map(|&x| derivative(values, criterion, x, &mut buf)).collect();
            for k in 0..SAMPLES {
                if ders[k] < 0.0 && ders[k + 1] > 0.0 {
                    cands.push(bisect(values, criterion, grid[k], grid[k + 1], &mut buf));
                }
            }
        }
        cands.sort_unstable_by(f64::total_cmp);
    }
    Ok(cands)
}

/// A global minimizer of `f` with its value.
pub fn solve_omp(values: &[f64], criterion: &Criterion) -> Result<OmpSolution> {
    check(values, criterion)?;
    let cands = if criterion.is_monotone() && criterion.power() > num_traits::One::one() {
        // f is convex: locate the root of the nondecreasing derivative
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let mut buf = Vec::with_capacity(values.len());
        if lo == hi {
            vec![lo]
        } else {
            vec![bisect(values, criterion, lo, hi, &mut buf), lo, hi]
        }
    } else {
        candidate_set(values, criterion)?
    };
    let mut best = OmpSolution { beta0: cands[0], value: f64::INFINITY, candidates: cands.len() };
    let mut buf = Vec::with_capacity(values.len());
    for &b in &cands {
        buf.clear();
        buf.extend(values.iter().map(|a| (a - b).abs()));
        let v = criterion.evaluate_in_place(&mut buf);
        if v < best.value {
            best = OmpSolution { beta0: b, value: v, ..best };
        }
    }
    Ok(best)
}

/// Reference objective `Φ_0 = κ^p f*` of the best horizontal hyperplane
/// `x_d = β_0` under `norm`.
pub fn reference_objective(dataset: &Dataset, criterion: &Criterion, norm: &NormSpec) -> Result<f64> {
    let values = dataset.column(dataset.dim() - 1);
    let f = solve_omp(&values, criterion)?.value;
    Ok(pow_rational(kappa(norm, dataset.dim()), criterion.power()) * f)
}

/// `1 − Φ*/Φ_0`. A zero reference is only meaningful for a perfect fit,
/// which scores 1.
pub fn gcod(phi_star: f64, dataset: &Dataset, criterion: &Criterion, norm: &NormSpec) -> Result<f64> {
    if !(phi_star >= 0.0) {
        return Err(invalid("objective value must be nonnegative"));
    }
    let phi0 = reference_objective(dataset, criterion, norm)?;
    if !(phi0 > 1e-300) {
        return if phi_star <= 1e-300 { Ok(1.0) } else { Err(Error::DegenerateReference) };
    }
    Ok(1.0 - phi_star / phi0)
}

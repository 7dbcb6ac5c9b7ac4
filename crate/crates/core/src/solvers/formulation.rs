//! Linear and mixed-integer models of the ordered-median fit on one slice
//! with `p = 1`.

use std::ops::Range;

use hyperfit_lp::{LinearProgram, MixedIntegerProgram, Relation};

use crate::error::Result;
use crate::solvers::slice::{Slice, SliceData};

/// How a nondecreasing `λ` is linearized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// One threshold variable per positive jump of `λ`:
    /// `Σ_{j>n−m} ε_(j) = min_t m t + Σ_i (ε_i − t)_+`. `O(n · levels)` size.
    Compact,
    /// Dual of the assignment relaxation: `min Σ u_i + Σ v_j` subject to
    /// `u_i + v_j ≥ λ_j ε_i`. `O(n²)` size.
    Assignment,
}

/// A model together with where its hyperplane variables live.
pub(crate) struct SliceModel {
    pub mip: MixedIntegerProgram,
    pub beta0: usize,
    pub theta: Range<usize>,
}

impl SliceModel {
    pub fn extract(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (x[self.beta0], x[self.theta.clone()].to_vec())
    }
}

/// Intercept and slice parameters, plus `e_i ≥ |s_i β^T(1, x_i)|` for each
/// active point. Returns the LP and the residual variable indices.
fn base(slice: &Slice, data: &SliceData, active: &[(usize, f64)]) -> Result<(LinearProgram, Vec<usize>, Range<usize>)> {
    let mut lp = LinearProgram::new();
    lp.add_var("b0", f64::NEG_INFINITY, f64::INFINITY, 0.0);
    let q = slice.num_params();
    let lower = if slice.is_simplex() { 0.0 } else { f64::NEG_INFINITY };
    for k in 0..q {
        lp.add_var(&format!("theta{}", k + 1), lower, f64::INFINITY, 0.0);
    }
    let theta = 1..1 + q;
    let eps: Vec<usize> =
        active.iter().map(|&(i, _)| lp.add_var(&format!("eps{}", i + 1), 0.0, f64::INFINITY, 0.0)).collect();
    if slice.is_simplex() {
        let terms: Vec<(usize, f64)> = theta.clone().map(|k| (k, 1.0)).collect();
        lp.add_sparse(&terms, Relation::Eq, 1.0)?;
    }
    for (&(i, s), &e) in active.iter().zip(&eps) {
        // e ≥ ±s (b0 + g·θ + h)
        for sign in [1.0, -1.0] {
            let mut terms = vec![(e, 1.0), (0, -sign * s)];
            terms.extend(data.g[i].iter().enumerate().map(|(k, g)| (1 + k, -sign * s * g)));
            lp.add_sparse(&terms, Relation::Ge, sign * s * data.h[i])?;
        }
    }
    Ok((lp, eps, theta))
}

/// LP for a nondecreasing `λ` (one entry per active point).
pub(crate) fn monotone_model(
    slice: &Slice,
    data: &SliceData,
    active: &[(usize, f64)],
    lambda: &[f64],
    formulation: Formulation,
) -> Result<SliceModel> {
    let (mut lp, eps, theta) = base(slice, data, active)?;
    let m = active.len();
    match formulation {
        Formulation::Compact => {
            for (r, delta) in jumps(lambda) {
                if delta > 0.0 {
                    add_largest_sum(&mut lp, active, &eps, r, m - r, delta)?;
                }
            }
        }
        Formulation::Assignment => {
            let u: Vec<usize> = active
                .iter()
                .map(|&(i, _)| lp.add_var(&format!("u{}", i + 1), f64::NEG_INFINITY, f64::INFINITY, 1.0))
                .collect();
            let v: Vec<usize> =
                (0..m).map(|j| lp.add_var(&format!("v{}", j + 1), f64::NEG_INFINITY, f64::INFINITY, 1.0)).collect();
            for (&ui, &e) in u.iter().zip(&eps) {
                for (&vj, &l) in v.iter().zip(lambda) {
                    lp.add_sparse(&[(ui, 1.0), (vj, 1.0), (e, -l)], Relation::Ge, 0.0)?;
                }
            }
        }
    }
    Ok(SliceModel { mip: lp.into(), beta0: 0, theta })
}

/// Nonzero jumps `(r, λ_r − λ_{r−1})` of `λ` (with `λ_{−1} = 0`), so that
/// `Φ = Σ_r jump_r · (sum of the n − r largest residuals)`.
fn jumps(lambda: &[f64]) -> impl Iterator<Item = (usize, f64)> + '_ {
    lambda
        .iter()
        .enumerate()
        .map(|(r, &l)| (r, l - if r == 0 { 0.0 } else { lambda[r - 1] }))
        .filter(|(_, d)| *d != 0.0)
}

/// Adds `weight · (sum of the `count` largest e)` to the objective, `weight > 0`:
/// `min_t count·t + Σ_i (e_i − t)_+`.
fn add_largest_sum(
    lp: &mut LinearProgram,
    active: &[(usize, f64)],
    eps: &[usize],
    tag: usize,
    count: usize,
    weight: f64,
) -> Result<()> {
    if count == eps.len() {
        for &e in eps {
            lp.set_cost(e, lp.objective()[e] + weight);
        }
        return Ok(());
    }
    let t = lp.add_var(&format!("t{}", tag + 1), f64::NEG_INFINITY, f64::INFINITY, weight * count as f64);
    for (&(i, _), &e) in active.iter().zip(eps) {
        let u = lp.add_var(&format!("u{}_{}", tag + 1, i + 1), 0.0, f64::INFINITY, weight);
        lp.add_sparse(&[(u, 1.0), (e, -1.0), (t, 1.0)], Relation::Ge, 0.0)?;
    }
    Ok(())
}

/// MILP for an arbitrary `λ ≥ 0` through the jump decomposition of `Φ`.
/// Increasing jumps are convex and stay linear; each decreasing jump
/// subtracts the largest `m`-subset sum, picked by binaries `z` with
/// `y_i ≤ e_i`, `y_i ≤ M z_i`, `Σ z = m`. Uses `n` binaries per decreasing
/// jump; `big_m` must bound every residual of some optimal hyperplane.
pub(crate) fn rcentrum_milp(slice: &Slice, data: &SliceData, lambda: &[f64], big_m: f64) -> Result<SliceModel> {
    let n = lambda.len();
    let active: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0)).collect();
    let (mut lp, eps, theta) = base(slice, data, &active)?;
    for &e in &eps {
        lp.set_bounds(e, 0.0, big_m);
    }
    let mut binaries = Vec::new();
    for (r, delta) in jumps(lambda) {
        let count = n - r;
        if delta > 0.0 {
            add_largest_sum(&mut lp, &active, &eps, r, count, delta)?;
            continue;
        }
        let mut pick = Vec::with_capacity(n);
        for (i, &e) in eps.iter().enumerate() {
            let y = lp.add_var(&format!("y{}_{}", r + 1, i + 1), 0.0, big_m, delta);
            let z = lp.add_var(&format!("z{}_{}", r + 1, i + 1), 0.0, 1.0, 0.0);
            lp.add_sparse(&[(y, 1.0), (e, -1.0)], Relation::Le, 0.0)?;
            lp.add_sparse(&[(y, 1.0), (z, -big_m)], Relation::Le, 0.0)?;
            pick.push((z, 1.0));
            binaries.push(z);
        }
        lp.add_sparse(&pick, Relation::Eq, count as f64)?;
    }
    Ok(SliceModel { mip: MixedIntegerProgram::new(lp, binaries)?, beta0: 0, theta })
}

/// MILP for an arbitrary `λ ≥ 0` over all points: binary `w_ij` assigns
/// point `i` to sorted position `j`, `o_j` carries the `j`-th smallest
/// residual. `big_m` must bound every residual of some optimal hyperplane.
pub(crate) fn ordered_milp(slice: &Slice, data: &SliceData, lambda: &[f64], big_m: f64) -> Result<SliceModel> {
    let n = lambda.len();
    let active: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0)).collect();
    let (mut lp, eps, theta) = base(slice, data, &active)?;
    let ord: Vec<usize> = (0..n).map(|j| lp.add_var(&format!("o{}", j + 1), 0.0, f64::INFINITY, lambda[j])).collect();
    let mut w = vec![vec![0usize; n]; n];
    for (i, row) in w.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = lp.add_var(&format!("w{}_{}", i + 1, j + 1), 0.0, 1.0, 0.0);
        }
    }
    for i in 0..n {
        for j in 0..n {
            // w_ij = 1 ⇒ o_j ≥ e_i
            lp.add_sparse(&[(eps[i], 1.0), (ord[j], -1.0), (w[i][j], big_m)], Relation::Le, big_m)?;
        }
    }
    for k in 0..n {
        let row: Vec<(usize, f64)> = (0..n).map(|j| (w[k][j], 1.0)).collect();
        lp.add_sparse(&row, Relation::Eq, 1.0)?;
        let col: Vec<(usize, f64)> = (0..n).map(|i| (w[i][k], 1.0)).collect();
        lp.add_sparse(&col, Relation::Eq, 1.0)?;
    }
    for j in 1..n {
        lp.add_sparse(&[(ord[j], 1.0), (ord[j - 1], -1.0)], Relation::Ge, 0.0)?;
    }
    // o is a permutation of e at integral points; valid and tightening
    let mut total: Vec<(usize, f64)> = ord.iter().map(|&o| (o, 1.0)).collect();
    total.extend(eps.iter().map(|&e| (e, -1.0)));
    lp.add_sparse(&total, Relation::Eq, 0.0)?;
    let binaries: Vec<usize> = w.iter().flatten().copied().collect();
    Ok(SliceModel { mip: MixedIntegerProgram::new(lp, binaries)?, beta0: 0, theta })
}

/// LP with the residual order fixed to `order` (`order[j]` is the point in
/// sorted position `j`): `min Σ_j λ_j e_order[j]` with `e` nondecreasing
/// along `order`. Minimizing over all orders gives the exact optimum for
/// any `λ ≥ 0`.
pub(crate) fn fixed_order_lp(slice: &Slice, data: &SliceData, order: &[usize], lambda: &[f64]) -> Result<SliceModel> {
    let n = order.len();
    let active: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0)).collect();
    let (mut lp, eps, theta) = base(slice, data, &active)?;
    for (j, &i) in order.iter().enumerate() {
        lp.set_cost(eps[i], lambda[j]);
        if j > 0 {
            lp.add_sparse(&[(eps[i], 1.0), (eps[order[j - 1]], -1.0)], Relation::Ge, 0.0)?;
        }
    }
    Ok(SliceModel { mip: lp.into(), beta0: 0, theta })
}

//! Exact `p = 1` search over the breakpoint arrangement of one slice.
//!
//! In the slice parameters `z` every signed residual `r_i(z)` is affine. The
//! hyperplanes `r_i = 0` and `r_i = ±r_j` (plus the slice's own bounds) cut
//! the domain into cells on which the signs and the order of all `|r_i|`
//! are fixed, so `Σ_j λ_j |r|_(j)` is linear on each cell. When the cells
//! are pointed a minimizer sits at a vertex, i.e. at the intersection of
//! `dim` of these hyperplanes.

use crate::solvers::engine::binomial;
use crate::solvers::slice::{Slice, SliceData};

/// The slice in reduced coordinates `z = (β_0, φ)`: `r_i = z_0 + G_i·φ + H_i`.
/// For a simplex slice `θ = (φ, 1 − Σφ)`.
struct Reduced {
    g: Vec<Vec<f64>>,
    h: Vec<f64>,
    /// Bounding hyperplanes `a·z = b` of the domain (simplex slices only).
    bounds: Vec<(Vec<f64>, f64)>,
    simplex: bool,
}

impl Reduced {
    fn new(slice: &Slice, data: &SliceData) -> Self {
        let q = slice.num_params();
        if !slice.is_simplex() {
            return Self { g: data.g.clone(), h: data.h.clone(), bounds: Vec::new(), simplex: false };
        }
        let g = data.g.iter().map(|gi| (0..q - 1).map(|k| gi[k] - gi[q - 1]).collect()).collect();
        let h = data.g.iter().zip(&data.h).map(|(gi, hi)| gi[q - 1] + hi).collect();
        let mut bounds = Vec::with_capacity(q);
        for k in 0..q - 1 {
            let mut a = vec![0.0; q];
            a[k + 1] = 1.0;
            bounds.push((a, 0.0));
        }
        if q > 1 {
            let mut a = vec![1.0; q];
            a[0] = 0.0;
            bounds.push((a, 1.0));
        }
        Self { g, h, bounds, simplex: true }
    }

    fn dim(&self) -> usize {
        self.g.first().map_or(1, |g| g.len() + 1)
    }

    fn theta(&self, phi: &[f64]) -> Vec<f64> {
        let mut t = phi.to_vec();
        if self.simplex {
            t.push(1.0 - phi.iter().sum::<f64>());
        }
        t
    }
}

/// Vertices the search visits on `slice` for `n` points.
pub(crate) fn vertex_count(slice: &Slice, n: usize) -> u128 {
    let dim = if slice.is_simplex() { slice.num_params() } else { slice.num_params() + 1 };
    let bounds = if slice.is_simplex() { slice.num_params() } else { 0 };
    binomial(n * n + bounds, dim)
}

/// Minimizes `Σ_j λ_j |r|_(j)` over the slice. Returns `(value, β_0, θ)`, or
/// `None` when the cells are not pointed (then vertices need not exist).
pub(crate) fn best_vertex(slice: &Slice, data: &SliceData, lambda: &[f64]) -> Option<(f64, f64, Vec<f64>)> {
    let red = Reduced::new(slice, data);
    let n = red.h.len();
    let dim = red.dim();

    let mut planes: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n * n + red.bounds.len());
    let zero_row: Vec<(Vec<f64>, f64)> = (0..n)
        .map(|i| {
            let mut a = vec![1.0];
            a.extend_from_slice(&red.g[i]);
            (a, -red.h[i])
        })
        .collect();
    planes.extend(zero_row.iter().cloned());
    planes.extend(red.bounds.iter().cloned());
    if rank(&planes.iter().map(|(a, _)| a.clone()).collect::<Vec<_>>()) < dim {
        return None;
    }
    for i in 0..n {
        for j in i + 1..n {
            // r_i = r_j
            let mut a = vec![0.0];
            a.extend(red.g[i].iter().zip(&red.g[j]).map(|(x, y)| x - y));
            if a.iter().any(|v| *v != 0.0) {
                planes.push((a, red.h[j] - red.h[i]));
            }
            // r_i = −r_j
            let mut a = vec![2.0];
            a.extend(red.g[i].iter().zip(&red.g[j]).map(|(x, y)| x + y));
            planes.push((a, -(red.h[i] + red.h[j])));
        }
    }

    let k = planes.len();
    if k < dim {
        return None;
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut buf = vec![0.0; n];
    let mut idx: Vec<usize> = (0..dim).collect();
    let mut m = vec![0.0; dim * (dim + 1)];
    loop {
        for (r, &p) in idx.iter().enumerate() {
            m[r * (dim + 1)..r * (dim + 1) + dim].copy_from_slice(&planes[p].0);
            m[r * (dim + 1) + dim] = planes[p].1;
        }
        if let Some(z) = solve_square(&mut m, dim) {
            let phi = &z[1..];
            let inside = !red.simplex || (phi.iter().all(|&v| v >= -1e-12) && phi.iter().sum::<f64>() <= 1.0 + 1e-12);
            if inside {
                for (i, o) in buf.iter_mut().enumerate() {
                    let s: f64 = red.g[i].iter().zip(phi).map(|(g, f)| g * f).sum();
                    *o = (z[0] + s + red.h[i]).abs();
                }
                buf.sort_unstable_by(f64::total_cmp);
                let v: f64 = lambda.iter().zip(&buf).map(|(l, e)| l * e).sum();
                if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                    best = Some((v, z));
                }
            }
        }
        let Some(p) = (0..dim).rev().find(|&p| idx[p] < k - dim + p) else { break };
        idx[p] += 1;
        for l in p + 1..dim {
            idx[l] = idx[l - 1] + 1;
        }
    }
    let (v, z) = best?;
    let mut phi = z[1..].to_vec();
    if red.simplex {
        // snap round-off back into the simplex
        for f in &mut phi {
            *f = f.max(0.0);
        }
        let s: f64 = phi.iter().sum();
        if s > 1.0 {
            phi.iter_mut().for_each(|f| *f /= s);
        }
    }
    Some((v, z[0], red.theta(&phi)))
}

/// Solves the `dim × dim` system stored row-major with its right-hand side
/// as the last column; `None` if (numerically) singular.
fn solve_square(m: &mut [f64], dim: usize) -> Option<Vec<f64>> {
    let w = dim + 1;
    for c in 0..dim {
        let piv = (c..dim).max_by(|&a, &b| m[a * w + c].abs().total_cmp(&m[b * w + c].abs()))?;
        let scale = (0..dim).map(|k| m[piv * w + k].abs()).fold(0.0, f64::max);
        if !(m[piv * w + c].abs() > 1e-12 * scale.max(1e-300)) {
            return None;
        }
        if piv != c {
            for k in 0..w {
                m.swap(c * w + k, piv * w + k);
            }
        }
        for r in c + 1..dim {
            let f = m[r * w + c] / m[c * w + c];
            if f != 0.0 {
                for k in c..w {
                    m[r * w + k] -= f * m[c * w + k];
                }
            }
        }
    }
    let mut z = vec![0.0; dim];
    for r in (0..dim).rev() {
        let s: f64 = (r + 1..dim).map(|k| m[r * w + k] * z[k]).sum();
        z[r] = (m[r * w + dim] - s) / m[r * w + r];
    }
    z.iter().all(|v| v.is_finite()).then_some(z)
}

fn rank(rows: &[Vec<f64>]) -> usize {
    let Some(cols) = rows.first().map(Vec::len) else { return 0 };
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let scale = m.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut r = 0;
    for c in 0..cols {
        let Some(piv) = (r..m.len()).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())) else { break };
        if m[piv][c].abs() <= 1e-10 * scale {
            continue;
        }
        m.swap(r, piv);
        for i in r + 1..m.len() {
            let f = m[i][c] / m[r][c];
            for k in c..cols {
                m[i][k] -= f * m[r][k];
            }
        }
        r += 1;
    }
    r
}

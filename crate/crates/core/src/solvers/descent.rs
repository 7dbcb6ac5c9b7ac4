//! Projected (sub)gradient descent for `p ≥ 1` and nondecreasing `λ` on one
//! slice, where the objective is convex in `(β_0, θ)`.

use nalgebra::{DMatrix, DVector};

use crate::geometry::dot;
use crate::solvers::slice::SliceData;

pub(crate) struct SliceObjective<'a> {
    pub data: &'a SliceData,
    /// `(point index, multiplier s_i)`.
    pub active: &'a [(usize, f64)],
    /// Nondecreasing, one weight per active point.
    pub lambda: &'a [f64],
    pub p: f64,
    pub simplex: bool,
}

impl SliceObjective<'_> {
    fn signed(&self, z: &[f64], buf: &mut Vec<(f64, usize)>) {
        buf.clear();
        for (k, &(i, s)) in self.active.iter().enumerate() {
            buf.push((s * self.data.signed(i, z[0], &z[1..]), k));
        }
        buf.sort_unstable_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    }

    pub fn value(&self, z: &[f64], buf: &mut Vec<(f64, usize)>) -> f64 {
        self.signed(z, buf);
        self.lambda.iter().zip(buf.iter()).filter(|(l, _)| **l != 0.0).map(|(l, (r, _))| l * r.abs().powf(self.p)).sum()
    }

    fn subgradient(&self, z: &[f64], grad: &mut [f64], buf: &mut Vec<(f64, usize)>) -> f64 {
        self.signed(z, buf);
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut value = 0.0;
        for (l, &(r, k)) in self.lambda.iter().zip(buf.iter()) {
            if *l == 0.0 {
                continue;
            }
            let e = r.abs();
            value += l * e.powf(self.p);
            let sign = if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            };
            let slope = if self.p == 1.0 { *l } else { l * self.p * e.powf(self.p - 1.0) };
            let (i, s) = self.active[k];
            let w = slope * sign * s;
            grad[0] += w;
            for (gk, x) in grad[1..].iter_mut().zip(&self.data.g[i]) {
                *gk += w * x;
            }
        }
        value
    }

    fn project(&self, z: &mut [f64]) {
        if self.simplex {
            project_simplex(&mut z[1..]);
        }
    }

    /// Minimizes from `start`, returning the best iterate and its value.
    pub fn minimize(&self, start: &[f64], iterations: usize, length_scale: f64) -> (Vec<f64>, f64) {
        let dim = start.len();
        let mut buf = Vec::with_capacity(self.active.len());
        let mut z = start.to_vec();
        self.project(&mut z);
        let mut grad = vec![0.0; dim];
        let mut f = self.subgradient(&z, &mut grad, &mut buf);
        let mut best = (z.clone(), f);
        let mut step_len = length_scale.max(1e-12);
        let mut stalled = 0usize;
        let mut fallback = 0usize;
        let mut trial = vec![0.0; dim];
        for _ in 0..iterations {
            let gn = dot(&grad, &grad).sqrt();
            if gn == 0.0 || !gn.is_finite() {
                break;
            }
            // Armijo backtracking along the projected gradient path
            let mut alpha = step_len / gn;
            let mut accepted = None;
            for _ in 0..60 {
                for k in 0..dim {
                    trial[k] = z[k] - alpha * grad[k];
                }
                self.project(&mut trial);
                let decrease: f64 = (0..dim).map(|k| grad[k] * (z[k] - trial[k])).sum();
                if decrease > 0.0 {
                    let ft = self.value(&trial, &mut buf);
                    if ft <= f - 1e-4 * decrease {
                        accepted = Some(ft);
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some(ft) => {
                    let moved = (0..dim).map(|k| (trial[k] - z[k]).powi(2)).sum::<f64>().sqrt();
                    step_len = (2.0 * alpha * gn).max(moved);
                    fallback = 0;
                    let improvement = f - ft;
                    std::mem::swap(&mut z, &mut trial);
                    stalled = if improvement <= 1e-15 * f.abs().max(1e-300) { stalled + 1 } else { 0 };
                }
                None => {
                    // kink or optimum: diminishing normalized subgradient step
                    fallback += 1;
                    let len = step_len / (fallback as f64).sqrt();
                    for k in 0..dim {
                        z[k] -= len * grad[k] / gn;
                    }
                    self.project(&mut z);
                    stalled += 1;
                }
            }
            f = self.subgradient(&z, &mut grad, &mut buf);
            if f < best.1 {
                best = (z.clone(), f);
            }
            if stalled > 200 {
                break;
            }
        }
        best
    }
}

impl SliceObjective<'_> {
    /// Gradient and Hessian with the sort order frozen at `z`. Curvature
    /// weights `|r|^{p−2}` are floored at `floor` so that `p < 2` stays finite.
    fn model(&self, z: &[f64], floor: f64, grad: &mut [f64], buf: &mut Vec<(f64, usize)>) -> (f64, DMatrix<f64>) {
        let value = self.subgradient(z, grad, buf);
        let dim = z.len();
        let mut hess = DMatrix::zeros(dim, dim);
        for (l, &(r, k)) in self.lambda.iter().zip(buf.iter()) {
            if *l == 0.0 {
                continue;
            }
            let w = l * self.p * (self.p - 1.0) * r.abs().max(floor).powf(self.p - 2.0);
            let (i, s) = self.active[k];
            let mut a = Vec::with_capacity(dim);
            a.push(s);
            a.extend(self.data.g[i].iter().map(|x| s * x));
            for u in 0..dim {
                for v in 0..dim {
                    hess[(u, v)] += w * a[u] * a[v];
                }
            }
        }
        (value, hess)
    }

    /// Damped Newton: minimizes the frozen-order quadratic model exactly over
    /// the feasible set, then backtracks on the true objective. Exact in one
    /// step for constant `λ` and `p = 2`.
    pub fn newton(&self, start: &[f64], iterations: usize) -> (Vec<f64>, f64) {
        let dim = start.len();
        let mut buf = Vec::with_capacity(self.active.len());
        let mut z = start.to_vec();
        self.project(&mut z);
        let mut grad = vec![0.0; dim];
        let mut f = self.value(&z, &mut buf);
        for _ in 0..iterations {
            let scale = buf.iter().map(|(r, _)| r.abs()).fold(0.0, f64::max);
            let (_, hess) = self.model(&z, 1e-9 * scale.max(1e-300), &mut grad, &mut buf);
            // linear term of the model in absolute coordinates: g − H z
            let zv = DVector::from_column_slice(&z);
            let c = DVector::from_column_slice(&grad) - &hess * &zv;
            let Some(y) = (if self.simplex { qp_on_simplex(&hess, &c) } else { qp_free(&hess, &c) }) else { break };
            let d: Vec<f64> = (0..dim).map(|k| y[k] - z[k]).collect();
            let slope: f64 = (0..dim).map(|k| grad[k] * d[k]).sum();
            if !(slope < -1e-15 * f.abs().max(1e-300)) {
                break;
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let trial: Vec<f64> = (0..dim).map(|k| z[k] + t * d[k]).collect();
                let ft = self.value(&trial, &mut buf);
                if ft <= f + 1e-4 * t * slope {
                    accepted = Some((trial, ft));
                    break;
                }
                t *= 0.5;
            }
            let Some((trial, ft)) = accepted else { break };
            let gain = f - ft;
            z = trial;
            f = ft;
            if gain <= 1e-15 * f.abs().max(1e-300) {
                break;
            }
        }
        (z, f)
    }
}

/// `argmin ½ yᵀHy + cᵀy` over all `y` (minimum-norm solution if `H` is singular).
fn qp_free(hess: &DMatrix<f64>, c: &DVector<f64>) -> Option<Vec<f64>> {
    let y = hess.clone().svd(true, true).solve(&(-c), 1e-13).ok()?;
    Some(y.iter().copied().collect())
}

/// `argmin ½ yᵀHy + cᵀy` with `y_0` free and `y_{1..}` in the unit simplex,
/// by enumerating the faces of the simplex: on the face holding the optimum in
/// its relative interior, the optimum is a stationary point of the restricted
/// problem.
fn qp_on_simplex(hess: &DMatrix<f64>, c: &DVector<f64>) -> Option<Vec<f64>> {
    let dim = c.len();
    let q = dim - 1;
    if q > 16 {
        return None;
    }
    let objective = |y: &[f64]| -> f64 {
        let yv = DVector::from_column_slice(y);
        0.5 * (yv.transpose() * hess * &yv)[(0, 0)] + c.dot(&yv)
    };
    let mut best: Option<(Vec<f64>, f64)> = None;
    for mask in 1u32..(1 << q) {
        let free: Vec<usize> = std::iter::once(0).chain((0..q).filter(|j| mask >> j & 1 == 1).map(|j| j + 1)).collect();
        let m = free.len();
        // KKT system of the face: [H_FF e; eᵀ 0] [y_F; ν] = [−c_F; 1]
        let kkt = DMatrix::from_fn(m + 1, m + 1, |r, s| match (r < m, s < m) {
            (true, true) => hess[(free[r], free[s])],
            (true, false) => f64::from(free[r] != 0),
            (false, true) => f64::from(free[s] != 0),
            (false, false) => 0.0,
        });
        let rhs = DVector::from_fn(m + 1, |r, _| if r < m { -c[free[r]] } else { 1.0 });
        let Ok(sol) = kkt.svd(true, true).solve(&rhs, 1e-13) else { continue };
        let mut y = vec![0.0; dim];
        for (r, &k) in free.iter().enumerate() {
            y[k] = sol[r];
        }
        if y[1..].iter().any(|v| *v < -1e-12) || !y.iter().all(|v| v.is_finite()) {
            continue;
        }
        project_simplex(&mut y[1..]);
        let v = objective(&y);
        if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
            best = Some((y, v));
        }
    }
    best.map(|(y, _)| y)
}

/// Euclidean projection onto `{θ ≥ 0, Σθ = 1}`.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            tau = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - tau).max(0.0));
}

/// Minimizes `Σ_i s_i² (β_0 + g_i·θ + h_i)²` over free `(β_0, θ)`.
pub(crate) fn weighted_least_squares(data: &SliceData, active: &[(usize, f64)]) -> Option<Vec<f64>> {
    let q = data.g.first().map_or(0, Vec::len);
    let a = DMatrix::from_fn(active.len(), q + 1, |r, c| {
        let (i, s) = active[r];
        if c == 0 {
            s
        } else {
            s * data.g[i][c - 1]
        }
    });
    let b = DVector::from_fn(active.len(), |r, _| {
        let (i, s) = active[r];
        -s * data.h[i]
    });
    let z = a.svd(true, true).solve(&b, 1e-12).ok()?;
    Some(z.iter().copied().collect())
}

//! Convex pieces ("disjuncts") of the hyperplane search space.
//!
//! On each piece `β^T(1,x) = β_0 + g(x)·θ + h(x)` is affine in the free
//! intercept `β_0` and a parameter vector `θ`, and the residual equals
//! `|β^T(1,x)|` exactly.

use crate::geometry::{dot, BlockNorm, Dataset};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Slice {
    /// `β = (β_0, θ, −1)`: vertical residuals, `θ` free.
    Vertical { dim: usize },
    /// `β_{-0} = Σ_k θ_k c_k` with `θ` in the unit simplex, where the `c_k`
    /// span the face of the polar ball on which one ball vertex is maximized.
    Face { corners: Vec<Vec<f64>>, vertex: usize },
}

impl Slice {
    pub fn num_params(&self) -> usize {
        match self {
            Slice::Vertical { dim } => dim - 1,
            Slice::Face { corners, .. } => corners.len(),
        }
    }

    pub fn is_simplex(&self) -> bool {
        matches!(self, Slice::Face { .. })
    }

    /// `(g, h)` for one point.
    pub fn feature(&self, x: &[f64]) -> (Vec<f64>, f64) {
        match self {
            Slice::Vertical { dim } => (x[..dim - 1].to_vec(), -x[dim - 1]),
            Slice::Face { corners, .. } => (corners.iter().map(|c| dot(c, x)).collect(), 0.0),
        }
    }

    pub fn features(&self, data: &Dataset) -> SliceData {
        let (g, h) = data.points().iter().map(|p| self.feature(p.coords())).unzip();
        SliceData { g, h }
    }

    /// Full coefficient vector `(β_0, β_1, …, β_d)`.
    pub fn beta(&self, beta0: f64, theta: &[f64]) -> Vec<f64> {
        match self {
            Slice::Vertical { .. } => {
                let mut b = Vec::with_capacity(theta.len() + 2);
                b.push(beta0);
                b.extend_from_slice(theta);
                b.push(-1.0);
                b
            }
            Slice::Face { corners, .. } => {
                let d = corners[0].len();
                let mut b = vec![0.0; d + 1];
                b[0] = beta0;
                for (c, t) in corners.iter().zip(theta) {
                    for j in 0..d {
                        b[j + 1] += t * c[j];
                    }
                }
                b
            }
        }
    }

    /// Barycentre of the parameter domain (the origin for vertical slices).
    pub fn centre(&self) -> Vec<f64> {
        let q = self.num_params();
        match self {
            Slice::Vertical { .. } => vec![0.0; q],
            Slice::Face { .. } => vec![1.0 / q as f64; q],
        }
    }
}

/// Precomputed affine data of every point on one slice.
#[derive(Debug, Clone)]
pub(crate) struct SliceData {
    pub g: Vec<Vec<f64>>,
    pub h: Vec<f64>,
}

impl SliceData {
    /// Signed value `β^T(1, x_i)` at `(β_0, θ)`.
    pub fn signed(&self, i: usize, beta0: f64, theta: &[f64]) -> f64 {
        beta0 + dot(&self.g[i], theta) + self.h[i]
    }
}

/// One slice per ball vertex, up to sign: the face of the polar ball where
/// that vertex attains the dual norm.
pub(crate) fn block_slices(norm: &BlockNorm) -> Vec<Slice> {
    let polar = norm.polar().vertices();
    norm.ball()
        .vertices()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.iter().find(|x| **x != 0.0).is_some_and(|x| *x > 0.0))
        .map(|(g, b)| {
            let corners: Vec<Vec<f64>> = polar.iter().filter(|v| dot(v, b) >= 1.0 - 1e-9).cloned().collect();
            Slice::Face { corners, vertex: g }
        })
        .collect()
}

//! Hyperplane fitting with ordered-median criteria.
//!
//! A fit minimizes `Σ_j λ_j ε_(j)^p` over hyperplanes `β_0 + β^T x = 0`, where
//! `ε_(1) ≤ … ≤ ε_(n)` are the sorted residuals of the data points, measured
//! either vertically or as distances in an ℓτ or block norm.

// `!(x > 0.0)` style tests are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod data;
mod error;
pub mod evaluation;
pub mod exponent;
pub mod geometry;
pub mod omp1d;
pub mod solvers;

pub use criteria::{Criterion, Preset};
pub use error::{Error, Result};
pub use exponent::{Exponent, Rational};
pub use geometry::{BlockNorm, Dataset, Hyperplane, NormSpec, Point, Polytope};
pub use solvers::{fit, FitResult, SolverHints};

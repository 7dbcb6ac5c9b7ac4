use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// No normalization applied.
    Raw,
    /// `β_d = -1`, so the hyperplane reads `x_d = β_0 + Σ β_j x_j`.
    VerticalUnit,
    /// The dual norm of the normal vector `β_{-0}` equals 1.
    DualUnit,
}

/// The hyperplane `{x : β_0 + Σ_j β_j x_j = 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperplane {
    beta: Vec<f64>,
    normalization: Normalization,
}

impl Hyperplane {
    /// `beta = (β_0, β_1, …, β_d)`; the normal part must be nonzero.
    pub fn new(beta: Vec<f64>) -> Result<Self> {
        Self::with_normalization(beta, Normalization::Raw)
    }

    pub(crate) fn with_normalization(beta: Vec<f64>, normalization: Normalization) -> Result<Self> {
        if beta.len() < 3 {
            return Err(Error::InvalidArgument("a hyperplane needs d ≥ 2".into()));
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::DegenerateHyperplane("non-finite coefficient".into()));
        }
        if beta[1..].iter().all(|b| *b == 0.0) {
            return Err(Error::DegenerateHyperplane("zero normal vector".into()));
        }
        Ok(Self { beta, normalization })
    }

    /// `x_d = intercept + Σ slopes_j x_j`.
    pub fn from_slopes(intercept: f64, slopes: &[f64]) -> Result<Self> {
        let mut beta = Vec::with_capacity(slopes.len() + 2);
        beta.push(intercept);
        beta.extend_from_slice(slopes);
        beta.push(-1.0);
        Self::with_normalization(beta, Normalization::VerticalUnit)
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn normal(&self) -> &[f64] {
        &self.beta[1..]
    }

    pub fn intercept(&self) -> f64 {
        self.beta[0]
    }

    pub fn dim(&self) -> usize {
        self.beta.len() - 1
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    /// `β^T (1, x)`.
    pub fn eval(&self, x: &Point) -> f64 {
        self.beta[0] + self.beta[1..].iter().zip(x.coords()).map(|(b, v)| b * v).sum::<f64>()
    }

    /// Rescaled so that `β_d = -1`.
    pub fn vertical_form(&self) -> Result<Self> {
        let bd = self.beta[self.beta.len() - 1];
        if bd.abs() < 1e-300 {
            return Err(Error::DegenerateHyperplane("hyperplane is parallel to the response axis".into()));
        }
        let beta = self.beta.iter().map(|b| -b / bd).collect();
        Ok(Self { beta, normalization: Normalization::VerticalUnit })
    }

    /// Slope and intercept of a planar line `y = a x + b` (`d = 2` only).
    pub fn slope_intercept(&self) -> Option<(f64, f64)> {
        if self.dim() != 2 {
            return None;
        }
        let v = self.vertical_form().ok()?;
        Some((v.beta[1], v.beta[0]))
    }

    pub(crate) fn scaled(&self, factor: f64, normalization: Normalization) -> Self {
        Self { beta: self.beta.iter().map(|b| b * factor).collect(), normalization }
    }

    /// Flips the sign so the first nonzero normal coefficient is positive.
    pub(crate) fn canonical_sign(mut self) -> Self {
        if let Some(first) = self.beta[1..].iter().find(|b| **b != 0.0) {
            if *first < 0.0 {
                self.beta.iter_mut().for_each(|b| *b = -*b);
            }
        }
        self
    }
}

use crate::error::{invalid, Error, Result};
use crate::exponent::Exponent;
use crate::geometry::polytope::{dot, polar_polytope, Polytope};

/// `‖v‖_τ`; also accepts `τ = ∞`.
pub fn ltau_norm(v: &[f64], tau: Exponent) -> Result<f64> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid("non-finite vector component"));
    }
    Ok(ltau_norm_unchecked(v, tau))
}

pub(crate) fn ltau_norm_unchecked(v: &[f64], tau: Exponent) -> f64 {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    match tau {
        Exponent::Infinite => max,
        _ if tau.is_one() => v.iter().map(|x| x.abs()).sum(),
        Exponent::Finite(_) => {
            if max == 0.0 {
                return 0.0;
            }
            let t = tau.to_f64();
            if t == 2.0 {
                return v.iter().map(|x| x * x).sum::<f64>().sqrt();
            }
            // scale by the largest entry to avoid overflow
            max * v.iter().map(|x| (x.abs() / max).powf(t)).sum::<f64>().powf(1.0 / t)
        }
    }
}

/// A block (polyhedral) norm: its unit ball `B` together with the polar
/// `B°`. `‖v‖_B = max_{b° ∈ Ext(B°)} |v·b°|` and the dual norm is
/// `max_{b ∈ Ext(B)} |v·b|`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockNorm {
    ball: Polytope,
    polar: Polytope,
}

impl BlockNorm {
    pub fn from_ball(ball: Polytope) -> Result<Self> {
        let polar = polar_polytope(&ball)?;
        Ok(Self { ball, polar })
    }

    /// The block norm whose unit ball is the polar of `polar`.
    pub fn from_polar(polar: Polytope) -> Result<Self> {
        let ball = polar_polytope(&polar)?;
        Ok(Self { ball, polar })
    }

    /// Symmetric vertex list of the unit ball (`d ≤ 3`).
    pub fn from_vertices(vertices: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_ball(Polytope::from_vertices(vertices)?)
    }

    pub fn l1(dim: usize) -> Self {
        Self { ball: Polytope::cross_polytope(dim), polar: Polytope::hypercube(dim) }
    }

    pub fn linf(dim: usize) -> Self {
        Self { ball: Polytope::hypercube(dim), polar: Polytope::cross_polytope(dim) }
    }

    pub fn ball(&self) -> &Polytope {
        &self.ball
    }

    pub fn polar(&self) -> &Polytope {
        &self.polar
    }

    pub fn dim(&self) -> usize {
        self.ball.dim()
    }

    /// The norm with unit ball `μ B`, i.e. `‖·‖_B / μ`.
    pub fn dilate(&self, mu: f64) -> Result<Self> {
        Ok(Self { ball: self.ball.dilate(mu)?, polar: self.polar.dilate(1.0 / mu)? })
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        max_abs_dot(self.polar.vertices(), v)
    }

    pub fn dual(&self, v: &[f64]) -> f64 {
        max_abs_dot(self.ball.vertices(), v)
    }
}

fn max_abs_dot(vertices: &[Vec<f64>], v: &[f64]) -> f64 {
    vertices.iter().map(|b| dot(b, v).abs()).fold(0.0, f64::max)
}

/// How residuals are measured.
#[derive(Debug, Clone, PartialEq)]
pub enum NormSpec {
    /// Difference in the last coordinate.
    Vertical,
    /// Distance in ℓτ.
    LTau(Exponent),
    /// Distance in a block norm.
    Block(BlockNorm),
}

impl NormSpec {
    pub fn l1() -> Self {
        NormSpec::LTau(Exponent::one())
    }

    pub fn linf() -> Self {
        NormSpec::LTau(Exponent::Infinite)
    }

    /// The distance-measuring norm of a vector (not defined for `Vertical`).
    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        match self {
            NormSpec::Vertical => Err(Error::Unsupported("vertical residuals have no norm".into())),
            NormSpec::LTau(t) => ltau_norm(v, *t),
            NormSpec::Block(b) => block_norm(v, b),
        }
    }

    /// The polyhedral equivalent of this norm in dimension `dim`, if it has one.
    pub fn as_block(&self, dim: usize) -> Option<BlockNorm> {
        match self {
            NormSpec::LTau(t) if t.is_one() => Some(BlockNorm::l1(dim)),
            NormSpec::LTau(Exponent::Infinite) => Some(BlockNorm::linf(dim)),
            NormSpec::Block(b) => Some(b.clone()),
            _ => None,
        }
    }
}

pub fn block_norm(v: &[f64], norm: &BlockNorm) -> Result<f64> {
    check_dim(v, norm.dim())?;
    Ok(norm.norm(v))
}

/// Dual norm `‖β‖_* = max_{‖k‖ ≤ 1} β·k`.
pub fn dual_norm(v: &[f64], norm: &NormSpec) -> Result<f64> {
    match norm {
        NormSpec::Vertical => Err(Error::Unsupported("vertical residuals have no dual norm".into())),
        NormSpec::LTau(t) => ltau_norm(v, t.conjugate()),
        NormSpec::Block(b) => {
            check_dim(v, b.dim())?;
            Ok(b.dual(v))
        }
    }
}

fn check_dim(v: &[f64], d: usize) -> Result<()> {
    if v.len() != d {
        return Err(invalid(format!("vector has dimension {}, norm has {d}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(invalid("non-finite vector component"));
    }
    Ok(())
}

/// Ratio between the norm residual of a horizontal hyperplane and the
/// vertical deviation: `1/‖e_d‖_*`, which is `1` for every ℓτ.
pub fn kappa(norm: &NormSpec, dim: usize) -> f64 {
    match norm {
        NormSpec::Vertical | NormSpec::LTau(_) => 1.0,
        NormSpec::Block(b) => {
            let mut e = vec![0.0; dim];
            e[dim - 1] = 1.0;
            1.0 / b.dual(&e)
        }
    }
}

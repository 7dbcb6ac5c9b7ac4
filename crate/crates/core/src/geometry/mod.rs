//! Points, hyperplanes, residual norms and the polytopes behind block norms.

mod hyperplane;
mod norm;
mod point;
mod polytope;
mod projection;

pub use hyperplane::{Hyperplane, Normalization};
pub use norm::{block_norm, dual_norm, kappa, ltau_norm, BlockNorm, NormSpec};
pub use point::{Dataset, Point};
pub use polytope::{inscribed_polytope, polar_polytope, Facet, Polytope};
pub use projection::{marginal_variation, projection_response, residual, residuals};

pub(crate) use polytope::dot;

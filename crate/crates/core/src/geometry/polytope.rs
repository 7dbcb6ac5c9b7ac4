use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::exponent::Exponent;
use crate::geometry::norm::ltau_norm_unchecked;

const TIGHT_TOL: f64 = 1e-9;

/// The half-space `normal · x ≤ offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Facet {
    fn ratio(&self, v: &[f64]) -> f64 {
        dot(&self.normal, v) / self.offset
    }
}

/// A full-dimensional polytope symmetric about the origin, stored with both
/// its vertices and its facets.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    facets: Vec<Facet>,
}

impl Polytope {
    /// Convex hull of a symmetric vertex set; facets are computed for
    /// `d ∈ {2, 3}`. Non-extreme points are discarded.
    pub fn from_vertices(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let dim = common_dim(&vertices)?;
        check_symmetric(&vertices)?;
        match dim {
            2 => hull_2d(vertices),
            3 => hull_3d(vertices),
            _ => Err(Error::UnsupportedDimension {
                dim,
                reason: "facets can only be computed from vertices for d ≤ 3; supply them explicitly".into(),
            }),
        }
    }

    /// Vertices and facets supplied together (any dimension); the pair is
    /// checked for consistency.
    pub fn from_parts(vertices: Vec<Vec<f64>>, facets: Vec<Facet>) -> Result<Self> {
        let dim = common_dim(&vertices)?;
        check_symmetric(&vertices)?;
        let p = Self { dim, vertices, facets };
        p.validate()?;
        Ok(p)
    }

    /// `conv{±e_i}`, the unit ball of ℓ1.
    pub fn cross_polytope(dim: usize) -> Self {
        let mut vertices = Vec::with_capacity(2 * dim);
        for i in 0..dim {
            for s in [1.0, -1.0] {
                let mut v = vec![0.0; dim];
                v[i] = s;
                vertices.push(v);
            }
        }
        let facets = sign_vectors(dim).into_iter().map(|normal| Facet { normal, offset: 1.0 }).collect();
        Self { dim, vertices, facets }
    }

    /// `[-1, 1]^d`, the unit ball of ℓ∞.
    pub fn hypercube(dim: usize) -> Self {
        let cross = Self::cross_polytope(dim);
        let vertices = sign_vectors(dim);
        let facets = cross.vertices.into_iter().map(|normal| Facet { normal, offset: 1.0 }).collect();
        Self { dim, vertices, facets }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Indices of the vertices lying on facet `i`.
    pub fn facet_vertices(&self, i: usize) -> Vec<usize> {
        let f = &self.facets[i];
        (0..self.vertices.len()).filter(|&k| f.ratio(&self.vertices[k]) >= 1.0 - TIGHT_TOL).collect()
    }

    /// `{μ x : x ∈ P}`.
    pub fn dilate(&self, mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(invalid("dilation factor must be positive and finite"));
        }
        Ok(Self {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| v.iter().map(|x| x * mu).collect()).collect(),
            facets: self.facets.iter().map(|f| Facet { normal: f.normal.clone(), offset: f.offset * mu }).collect(),
        })
    }

    /// Minkowski gauge `min{t ≥ 0 : v ∈ t P}`: the norm with unit ball `P`.
    pub fn gauge(&self, v: &[f64]) -> f64 {
        self.facets.iter().map(|f| f.ratio(v)).fold(0.0, f64::max)
    }

    /// Support function `max_{x ∈ P} v·x`: the dual norm of the gauge.
    pub fn support(&self, v: &[f64]) -> f64 {
        self.vertices.iter().map(|x| dot(x, v)).fold(0.0, f64::max)
    }

    /// Checks the structural invariants (positive offsets, containment,
    /// tight facets, extreme vertices).
    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        if self.facets.is_empty() || self.vertices.len() < 2 * d {
            return Err(invalid("polytope is not full-dimensional"));
        }
        for f in &self.facets {
            if f.normal.len() != d {
                return Err(invalid("facet normal has the wrong dimension"));
            }
            if !(f.offset > 0.0 && f.offset.is_finite()) || f.normal.iter().any(|a| !a.is_finite()) {
                return Err(invalid("facet offsets must be positive and finite"));
            }
        }
        for v in &self.vertices {
            let ratios: Vec<f64> = self.facets.iter().map(|f| f.ratio(v)).collect();
            if ratios.iter().any(|&r| r > 1.0 + TIGHT_TOL) {
                return Err(invalid("a vertex violates a facet inequality"));
            }
            if ratios.iter().filter(|&&r| r >= 1.0 - TIGHT_TOL).count() < d {
                return Err(invalid("a listed vertex is not an extreme point"));
            }
        }
        for i in 0..self.facets.len() {
            if self.facet_vertices(i).len() < d {
                return Err(invalid("a facet touches fewer than d vertices"));
            }
        }
        Ok(())
    }
}

/// The polar `P° = {y : y·x ≤ 1 ∀x ∈ P}`. Facets of `P` become vertices of
/// `P°` and vice versa.
pub fn polar_polytope(p: &Polytope) -> Result<Polytope> {
    let vertices: Vec<Vec<f64>> = p.facets.iter().map(|f| f.normal.iter().map(|a| a / f.offset).collect()).collect();
    let facets = p.vertices.iter().map(|v| Facet { normal: v.clone(), offset: 1.0 }).collect();
    let polar = Polytope { dim: p.dim, vertices, facets };
    polar.validate()?;
    Ok(polar)
}

/// Polygon with `n_vertices` vertices on the unit sphere of ℓν
/// (`ν` conjugate to `tau`), at equally spaced angles.
///
/// Returns the polygon and its ℓν inradius `min_i b_i / ‖a_i‖_τ`, the
/// largest `r` with `r ‖z‖_P ≤ ‖z‖_ν`.
pub fn inscribed_polytope(tau: Exponent, n_vertices: usize, dim: usize) -> Result<(Polytope, f64)> {
    if dim != 2 {
        return Err(Error::UnsupportedDimension {
            dim,
            reason: "inscribed ℓν polygons are only defined in the plane".into(),
        });
    }
    if n_vertices < 4 || n_vertices % 2 == 1 {
        return Err(invalid(format!("vertex count {n_vertices} must be even and at least 4")));
    }
    let nu = tau.conjugate();
    let half: Vec<Vec<f64>> = (0..n_vertices / 2)
        .map(|k| {
            let angle = 2.0 * PI * k as f64 / n_vertices as f64;
            let u = [angle.cos(), angle.sin()];
            let r = ltau_norm_unchecked(&u, nu);
            vec![u[0] / r, u[1] / r]
        })
        .collect();
    let mut vertices = half.clone();
    vertices.extend(half.iter().map(|v| vec![-v[0], -v[1]]));
    let poly = Polytope::from_vertices(vertices)?;
    let r = poly.facets.iter().map(|f| f.offset / ltau_norm_unchecked(&f.normal, tau)).fold(f64::INFINITY, f64::min);
    Ok((poly, r))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sign_vectors(dim: usize) -> Vec<Vec<f64>> {
    (0..1usize << dim).map(|mask| (0..dim).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()).collect()
}

fn common_dim(vertices: &[Vec<f64>]) -> Result<usize> {
    let dim = vertices.first().map(Vec::len).ok_or_else(|| invalid("polytope has no vertices"))?;
    if dim == 0 || vertices.iter().any(|v| v.len() != dim) {
        return Err(invalid("vertices have inconsistent dimensions"));
    }
    if vertices.iter().flatten().any(|x| !x.is_finite()) {
        return Err(invalid("non-finite vertex coordinate"));
    }
    Ok(dim)
}

fn scale_of(vertices: &[Vec<f64>]) -> f64 {
    vertices.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn check_symmetric(vertices: &[Vec<f64>]) -> Result<()> {
    let tol = 1e-9 * scale_of(vertices).max(1.0);
    for v in vertices {
        let mirrored = vertices.iter().any(|w| v.iter().zip(w).all(|(a, b)| (a + b).abs() <= tol));
        if !mirrored {
            return Err(invalid("vertex set is not symmetric about the origin"));
        }
    }
    Ok(())
}

fn hull_2d(mut pts: Vec<Vec<f64>>) -> Result<Polytope> {
    let tol = 1e-12 * scale_of(&pts).powi(2).max(f64::MIN_POSITIVE);
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= 1e-12 && (a[1] - b[1]).abs() <= 1e-12);
    let cross = |o: &[f64], a: &[f64], b: &[f64]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    // Andrew's monotone chain, dropping collinear points.
    let mut hull: Vec<Vec<f64>> = Vec::with_capacity(pts.len() + 1);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec<f64>>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= tol {
                hull.pop();
            }
            hull.push(p.clone());
        }
        hull.pop();
    }
    if hull.len() < 4 {
        return Err(invalid("vertex set does not span the plane"));
    }
    // Start at the vertex with the smallest polar angle in [0, 2π).
    let angle = |v: &Vec<f64>| v[1].atan2(v[0]).rem_euclid(2.0 * PI);
    let first = (0..hull.len()).min_by(|&i, &j| angle(&hull[i]).total_cmp(&angle(&hull[j]))).unwrap_or(0);
    hull.rotate_left(first);
    let m = hull.len();
    let facets = (0..m)
        .map(|k| {
            let (a, b) = (&hull[k], &hull[(k + 1) % m]);
            let det = a[0] * b[1] - a[1] * b[0];
            Facet { normal: vec![(b[1] - a[1]) / det, (a[0] - b[0]) / det], offset: 1.0 }
        })
        .collect();
    let p = Polytope { dim: 2, vertices: hull, facets };
    p.validate()?;
    Ok(p)
}

fn hull_3d(mut pts: Vec<Vec<f64>>) -> Result<Polytope> {
    pts.dedup();
    let mut facets: Vec<Facet> = Vec::new();
    let n = pts.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let m = DMatrix::from_fn(3, 3, |r, c| [&pts[i], &pts[j], &pts[k]][r][c]);
                if m.determinant().abs() < 1e-12 * scale_of(&pts).powi(3) {
                    continue;
                }
                let Some(a) = m.lu().solve(&DVector::from_element(3, 1.0)) else { continue };
                let a: Vec<f64> = a.iter().copied().collect();
                if pts.iter().all(|v| dot(&a, v) <= 1.0 + TIGHT_TOL)
                    && !facets
                        .iter()
                        .any(|f| f.normal.iter().zip(&a).all(|(x, y)| (x - y).abs() <= 1e-9 * x.abs().max(1.0)))
                {
                    facets.push(Facet { normal: a, offset: 1.0 });
                }
            }
        }
    }
    if facets.is_empty() {
        return Err(invalid("vertex set does not span space"));
    }
    let vertices: Vec<Vec<f64>> =
        pts.into_iter().filter(|v| facets.iter().filter(|f| f.ratio(v) >= 1.0 - TIGHT_TOL).count() >= 3).collect();
    let p = Polytope { dim: 3, vertices, facets };
    p.validate()?;
    Ok(p)
}

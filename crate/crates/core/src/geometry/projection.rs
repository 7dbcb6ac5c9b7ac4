use crate::error::{invalid, Error, Result};
use crate::exponent::Exponent;
use crate::geometry::norm::{ltau_norm_unchecked, NormSpec};
use crate::geometry::polytope::dot;
use crate::geometry::{Hyperplane, Point};

/// Returns `(D, k)` with `D = ‖β_{-0}‖_*` and `k` a unit vector (in the
/// residual norm) attaining `β_{-0}·k = D`: the direction along which a point
/// moves to its projection. For vertical residuals `k = ±e_d`.
pub(crate) fn projection_direction(normal: &[f64], norm: &NormSpec) -> Result<(f64, Vec<f64>)> {
    let d = normal.len();
    let argmax = |vals: &mut dyn Iterator<Item = f64>| {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, v) in vals.enumerate() {
            if v > best.1 {
                best = (i, v);
            }
        }
        best
    };
    let (dual, k) = match norm {
        NormSpec::Vertical => {
            let bd = normal[d - 1];
            let mut k = vec![0.0; d];
            k[d - 1] = bd.signum();
            (bd.abs(), k)
        }
        NormSpec::LTau(t) if t.is_one() => {
            let (i, m) = argmax(&mut normal.iter().map(|b| b.abs()));
            let mut k = vec![0.0; d];
            k[i] = normal[i].signum();
            (m, k)
        }
        NormSpec::LTau(Exponent::Infinite) => {
            let k: Vec<f64> = normal.iter().map(|&b| if b == 0.0 { 0.0 } else { b.signum() }).collect();
            (normal.iter().map(|b| b.abs()).sum(), k)
        }
        NormSpec::LTau(tau) => {
            let nu = tau.conjugate();
            let dual = ltau_norm_unchecked(normal, nu);
            let (t, n) = (tau.to_f64(), nu.to_f64());
            // k_j = sign(β_j) |β_j / D|^(ν-1) has unit ℓτ norm and β·k = D
            let k = normal
                .iter()
                .map(|&b| if dual == 0.0 { 0.0 } else { b.signum() * (b.abs() / dual).powf(n / t) })
                .collect();
            (dual, k)
        }
        NormSpec::Block(b) => {
            if b.dim() != d {
                return Err(invalid("block norm dimension does not match the hyperplane"));
            }
            let verts = b.ball().vertices();
            let (i, m) = argmax(&mut verts.iter().map(|v| dot(v, normal)));
            (m, verts[i].clone())
        }
    };
    if !(dual > 0.0) {
        return Err(Error::DegenerateHyperplane(match norm {
            NormSpec::Vertical => "hyperplane is parallel to the response axis".into(),
            _ => "normal vector has zero dual norm".into(),
        }));
    }
    Ok((dual, k))
}

fn check_point(h: &Hyperplane, x: &Point) -> Result<()> {
    if x.dim() != h.dim() {
        return Err(invalid(format!("point has dimension {}, hyperplane {}", x.dim(), h.dim())));
    }
    Ok(())
}

/// Distance from `x` to the hyperplane in the residual norm:
/// `|β^T(1,x)| / ‖β_{-0}‖_*` (or `/|β_d|` for vertical residuals).
pub fn residual(h: &Hyperplane, x: &Point, norm: &NormSpec) -> Result<f64> {
    check_point(h, x)?;
    let (dual, _) = projection_direction(h.normal(), norm)?;
    Ok(h.eval(x).abs() / dual)
}

/// Residuals of every point, computing the dual norm once.
pub fn residuals(h: &Hyperplane, points: &[Point], norm: &NormSpec) -> Result<Vec<f64>> {
    let (dual, _) = projection_direction(h.normal(), norm)?;
    points
        .iter()
        .map(|x| {
            check_point(h, x)?;
            Ok(h.eval(x).abs() / dual)
        })
        .collect()
}

/// A nearest point of the hyperplane to `x`: `x - (β^T(1,x)/D) k`.
pub fn projection_response(h: &Hyperplane, x: &Point, norm: &NormSpec) -> Result<Vec<f64>> {
    check_point(h, x)?;
    let (dual, k) = projection_direction(h.normal(), norm)?;
    let s = h.eval(x) / dual;
    Ok(x.coords().iter().zip(&k).map(|(xi, ki)| xi - s * ki).collect())
}

/// `∂ x̂_d / ∂ x_j` for `j ∈ 1..d-1` (1-based): the change in the projected
/// response per unit change of predictor `j`, namely `-β_j k_d / D`.
pub fn marginal_variation(h: &Hyperplane, j: usize, norm: &NormSpec) -> Result<f64> {
    let d = h.dim();
    if j == 0 || j >= d {
        return Err(invalid(format!("predictor index {j} outside 1..{}", d - 1)));
    }
    let (dual, k) = projection_direction(h.normal(), norm)?;
    Ok(-h.beta()[j] * k[d - 1] / dual)
}

use std::f64::consts::PI;

use hyperfit_core::geometry::{
    block_norm, dual_norm, inscribed_polytope, kappa, ltau_norm, marginal_variation, polar_polytope,
    projection_response, residual, BlockNorm, Hyperplane, NormSpec, Point, Polytope,
};
use hyperfit_core::{Error, Exponent, Rational};
use hyperfit_lp::{solve_lp, LinearProgram, Relation};
use proptest::prelude::*;

fn hexagon() -> BlockNorm {
    BlockNorm::from_vertices(vec![
        vec![2.0, 0.0],
        vec![2.0, 2.0],
        vec![-1.0, 2.0],
        vec![-2.0, 0.0],
        vec![-2.0, -2.0],
        vec![1.0, -2.0],
    ])
    .unwrap()
}

fn tau(num: u64, den: u64) -> Exponent {
    Exponent::new(Rational::new(num, den)).unwrap()
}

fn same_vertex_set(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> bool {
    a.len() == b.len() && a.iter().all(|v| b.iter().any(|w| v.iter().zip(w).all(|(x, y)| (x - y).abs() <= tol)))
}

/// `min t` such that `v = Σ μ_g b_g`, `Σ μ_g = t`, `μ ≥ 0`.
fn gauge_by_lp(v: &[f64], vertices: &[Vec<f64>]) -> f64 {
    let g = vertices.len();
    let mut lp = LinearProgram::with_vars(g);
    let t = lp.add_var("t", 0.0, f64::INFINITY, 1.0);
    for j in 0..v.len() {
        let mut row: Vec<(usize, f64)> = (0..g).map(|k| (k, vertices[k][j])).collect();
        row.retain(|(_, c)| *c != 0.0);
        lp.add_sparse(&row, Relation::Eq, v[j]).unwrap();
    }
    let mut row: Vec<(usize, f64)> = (0..g).map(|k| (k, 1.0)).collect();
    row.push((t, -1.0));
    lp.add_sparse(&row, Relation::Eq, 0.0).unwrap();
    solve_lp(&lp).unwrap().into_optimal().unwrap().objective
}

#[test]
fn ltau_examples() {
    assert_eq!(ltau_norm(&[3.0, 4.0], Exponent::two()).unwrap(), 5.0);
    assert_eq!(ltau_norm(&[1.0, -1.0], Exponent::one()).unwrap(), 2.0);
    let expected = (1.0f64 + 1.0 + 2.0f64.powf(1.5)).powf(2.0 / 3.0);
    // independent power routine: exp/ln
    let alt = ((2.0 + (1.5 * 2.0f64.ln()).exp()).ln() / 1.5).exp();
    let got = ltau_norm(&[1.0, -1.0, 2.0], tau(3, 2)).unwrap();
    assert!((got - expected).abs() < 1e-12 && (got - alt).abs() < 1e-12);
    assert_eq!(ltau_norm(&[1.0, -7.0], Exponent::Infinite).unwrap(), 7.0);
    assert!(matches!(ltau_norm(&[f64::NAN], Exponent::two()), Err(Error::InvalidArgument(_))));
}

#[test]
fn l1_block_examples() {
    let l1 = BlockNorm::from_vertices(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0], vec![0.0, -1.0]]).unwrap();
    assert_eq!(block_norm(&[1.0, 0.0], &l1).unwrap(), 1.0);
    for v in l1.ball().vertices() {
        assert!((block_norm(v, &l1).unwrap() - 1.0).abs() < 1e-12);
    }
    let expected = vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
    assert!(same_vertex_set(l1.polar().vertices(), &expected, 1e-12));
}

#[test]
fn hexagon_polar_by_line_intersection() {
    let hex = hexagon();
    let ball = hex.ball().vertices().to_vec();
    // consecutive-edge intersection oracle: the polar vertex dual to the
    // edge [b_k, b_{k+1}] solves v·b_k = v·b_{k+1} = 1
    let mut sorted = ball.clone();
    sorted.sort_by(|a, b| a[1].atan2(a[0]).total_cmp(&b[1].atan2(b[0])));
    let mut oracle = Vec::new();
    for k in 0..sorted.len() {
        let (a, b) = (&sorted[k], &sorted[(k + 1) % sorted.len()]);
        let det = a[0] * b[1] - a[1] * b[0];
        oracle.push(vec![(b[1] - a[1]) / det, (a[0] - b[0]) / det]);
    }
    assert!(same_vertex_set(hex.polar().vertices(), &oracle, 1e-12));
    for v in hex.polar().vertices() {
        let tight = ball.iter().filter(|b| (v[0] * b[0] + v[1] * b[1] - 1.0).abs() < 1e-9).count();
        assert!(ball.iter().all(|b| v[0] * b[0] + v[1] * b[1] <= 1.0 + 1e-9));
        assert_eq!(tight, 2);
    }
    let expected =
        vec![vec![0.5, 0.0], vec![-0.5, 0.0], vec![0.0, 0.5], vec![0.0, -0.5], vec![-0.5, 0.25], vec![0.5, -0.25]];
    assert!(same_vertex_set(hex.polar().vertices(), &expected, 1e-12));
}

#[test]
fn polar_rejects_high_dimension() {
    let verts: Vec<Vec<f64>> = Polytope::cross_polytope(4).vertices().to_vec();
    assert!(matches!(Polytope::from_vertices(verts), Err(Error::UnsupportedDimension { .. })));
}

#[test]
fn dual_norm_examples() {
    assert!((dual_norm(&[3.0, 4.0], &NormSpec::LTau(Exponent::two())).unwrap() - 5.0).abs() < 1e-12);
    assert_eq!(dual_norm(&[1.0, 1.0], &NormSpec::l1()).unwrap(), 1.0);
    assert!(dual_norm(&[1.0, 1.0], &NormSpec::Vertical).is_err());
    // sup of v·z over a fine sample of the ℓ3 unit sphere
    let v = [1.0, 2.0];
    let l3 = NormSpec::LTau(Exponent::integer(3).unwrap());
    let mut sup: f64 = 0.0;
    for k in 0..200_000 {
        let a = 2.0 * PI * k as f64 / 200_000.0;
        let z = [a.cos(), a.sin()];
        let n = l3.norm(&z).unwrap();
        sup = sup.max((v[0] * z[0] + v[1] * z[1]) / n);
    }
    let got = dual_norm(&v, &l3).unwrap();
    assert!((got - ltau_norm(&v, tau(3, 2)).unwrap()).abs() < 1e-12);
    assert!((got - sup).abs() < 1e-8, "{got} vs {sup}");
}

#[test]
fn kappa_examples() {
    assert_eq!(kappa(&NormSpec::LTau(tau(3, 2)), 2), 1.0);
    assert_eq!(kappa(&NormSpec::Block(hexagon()), 2), 0.5);
    let linf =
        BlockNorm::from_vertices(vec![vec![1.0, 1.0], vec![1.0, -1.0], vec![-1.0, 1.0], vec![-1.0, -1.0]]).unwrap();
    assert_eq!(kappa(&NormSpec::Block(linf), 2), 1.0);
}

#[test]
fn residual_examples() {
    let lss = Hyperplane::new(vec![6.7934, -0.4133, -1.0]).unwrap();
    let on = Point::new(vec![0.0, 6.7934]).unwrap();
    for norm in [NormSpec::Vertical, NormSpec::l1(), NormSpec::linf(), NormSpec::LTau(Exponent::two())] {
        assert!(residual(&lss, &on, &norm).unwrap().abs() < 1e-12);
    }
    let diag = Hyperplane::new(vec![0.0, 1.0, -1.0]).unwrap();
    let l2 = NormSpec::LTau(Exponent::two());
    assert_eq!(residual(&diag, &Point::new(vec![0.0, 0.0]).unwrap(), &l2).unwrap(), 0.0);
    let r = residual(&diag, &Point::new(vec![1.0, 0.0]).unwrap(), &l2).unwrap();
    assert!((r - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
    let flat = Hyperplane::new(vec![1.0, 1.0, 0.0]).unwrap();
    assert!(matches!(
        residual(&flat, &Point::new(vec![0.0, 0.0]).unwrap(), &NormSpec::Vertical),
        Err(Error::DegenerateHyperplane(_))
    ));
}

#[test]
fn projection_examples() {
    let l2 = NormSpec::LTau(Exponent::two());
    let diag = Hyperplane::new(vec![0.0, 1.0, -1.0]).unwrap();
    let x = Point::new(vec![1.0, 0.0]).unwrap();
    let z = projection_response(&diag, &x, &l2).unwrap();
    assert!((z[0] - 0.5).abs() < 1e-12 && (z[1] - 0.5).abs() < 1e-12);
    // ℓ1: β = (0, 2, −1) moves only the first coordinate
    let h = Hyperplane::new(vec![0.0, 2.0, -1.0]).unwrap();
    let x = Point::new(vec![1.0, 1.0]).unwrap();
    let z = projection_response(&h, &x, &NormSpec::l1()).unwrap();
    assert_eq!(z[1], 1.0);
    assert!((2.0 * z[0] - z[1]).abs() < 1e-12);
    let moved = (x[0] - z[0]).abs() + (x[1] - z[1]).abs();
    assert!((moved - residual(&h, &x, &NormSpec::l1()).unwrap()).abs() < 1e-12);
    let on = Point::new(vec![0.5, 1.0]).unwrap();
    assert_eq!(projection_response(&h, &on, &NormSpec::l1()).unwrap(), vec![0.5, 1.0]);
}

#[test]
fn marginal_variation_examples() {
    let l2 = NormSpec::LTau(Exponent::two());
    let h = Hyperplane::new(vec![0.0, 1.0, -1.0]).unwrap();
    assert!((marginal_variation(&h, 1, &l2).unwrap() - 0.5).abs() < 1e-12);
    let v = Hyperplane::new(vec![3.0, 0.7, -1.0]).unwrap();
    assert!((marginal_variation(&v, 1, &NormSpec::Vertical).unwrap() - 0.7).abs() < 1e-12);
    // steep ℓ1 line: the largest normal entry is the predictor's
    let steep = Hyperplane::new(vec![25.81, -7.0, 1.0]).unwrap();
    assert_eq!(marginal_variation(&steep, 1, &NormSpec::l1()).unwrap(), 0.0);
    assert!(marginal_variation(&h, 2, &l2).is_err());
}

#[test]
fn inscribed_examples() {
    let (p16, r16) = inscribed_polytope(Exponent::two(), 16, 2).unwrap();
    assert!((r16 - (PI / 16.0).cos()).abs() < 1e-12);
    assert_eq!(p16.vertices().len(), 16);
    let (_, r320) = inscribed_polytope(Exponent::two(), 320, 2).unwrap();
    assert!(1.0 - r320 < 5e-5);
    for t in [tau(3, 2), Exponent::two(), Exponent::integer(3).unwrap()] {
        let (p, r) = inscribed_polytope(t, 40, 2).unwrap();
        assert!(r > 0.0 && r <= 1.0);
        for v in p.vertices() {
            assert!((ltau_norm(v, t.conjugate()).unwrap() - 1.0).abs() < 1e-12);
        }
    }
    assert!(inscribed_polytope(Exponent::two(), 7, 2).is_err());
    assert!(inscribed_polytope(Exponent::two(), 2, 2).is_err());
}

fn unit_dir() -> impl Strategy<Value = [f64; 2]> {
    (0.0..2.0 * PI).prop_map(|a| [a.cos(), a.sin()])
}

fn norms() -> Vec<NormSpec> {
    vec![
        NormSpec::l1(),
        NormSpec::linf(),
        NormSpec::LTau(Exponent::two()),
        NormSpec::LTau(tau(3, 2)),
        NormSpec::LTau(Exponent::integer(3).unwrap()),
        NormSpec::Block(hexagon()),
    ]
}

proptest! {
    #[test]
    fn block_norm_matches_lp_gauge(v in prop::array::uniform2(-10.0f64..10.0)) {
        let hex = hexagon();
        let lp = gauge_by_lp(&v, hex.ball().vertices());
        prop_assert!((block_norm(&v, &hex).unwrap() - lp).abs() < 1e-9 * lp.max(1.0));
    }

    #[test]
    fn dual_pairing(v in prop::array::uniform2(-5.0f64..5.0), z in unit_dir()) {
        for norm in norms() {
            let zn = norm.norm(&z).unwrap();
            let zz = [z[0] / zn, z[1] / zn];
            prop_assert!(v[0] * zz[0] + v[1] * zz[1] <= dual_norm(&v, &norm).unwrap() + 1e-9);
        }
    }

    #[test]
    fn projection_consistency(
        beta in prop::array::uniform3(-5.0f64..5.0),
        x in prop::array::uniform2(-10.0f64..10.0),
        c in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0],
    ) {
        prop_assume!(beta[1].abs() + beta[2].abs() > 1e-2);
        let h = Hyperplane::new(beta.to_vec()).unwrap();
        let hc = Hyperplane::new(beta.iter().map(|b| b * c).collect()).unwrap();
        let p = Point::new(x.to_vec()).unwrap();
        for norm in norms() {
            let r = residual(&h, &p, &norm).unwrap();
            let z = projection_response(&h, &p, &norm).unwrap();
            let moved = norm.norm(&[x[0] - z[0], x[1] - z[1]]).unwrap();
            prop_assert!((moved - r).abs() < 1e-8 * r.max(1.0));
            prop_assert!((beta[0] + beta[1] * z[0] + beta[2] * z[1]).abs() < 1e-9 * (1.0 + x[0].abs() + x[1].abs()) * 5.0);
            prop_assert!((residual(&hc, &p, &norm).unwrap() - r).abs() < 1e-10 * r.max(1.0));
        }
    }

    #[test]
    fn marginal_variation_is_a_derivative(
        beta in prop::array::uniform3(-5.0f64..5.0),
        x in prop::array::uniform2(-10.0f64..10.0),
    ) {
        prop_assume!(beta[2].abs() > 0.1 && beta[1].abs() > 0.1);
        prop_assume!((beta[1].abs() - beta[2].abs()).abs() > 0.1);
        let h = Hyperplane::new(beta.to_vec()).unwrap();
        for norm in norms() {
            let step = 1e-5;
            let up = projection_response(&h, &Point::new(vec![x[0] + step, x[1]]).unwrap(), &norm).unwrap();
            let down = projection_response(&h, &Point::new(vec![x[0] - step, x[1]]).unwrap(), &norm).unwrap();
            let fd = (up[1] - down[1]) / (2.0 * step);
            prop_assert!((marginal_variation(&h, 1, &norm).unwrap() - fd).abs() < 1e-4);
        }
    }

    #[test]
    fn polar_round_trip_2d(angles in prop::collection::vec(0.0..PI, 2..7), radii in prop::collection::vec(0.5f64..3.0, 7)) {
        let mut pts = Vec::new();
        for (a, r) in angles.iter().zip(&radii) {
            pts.push(vec![r * a.cos(), r * a.sin()]);
            pts.push(vec![-r * a.cos(), -r * a.sin()]);
        }
        let Ok(p) = Polytope::from_vertices(pts) else { return Ok(()) };
        let back = polar_polytope(&polar_polytope(&p).unwrap()).unwrap();
        prop_assert!(same_vertex_set(p.vertices(), back.vertices(), 1e-9));
    }

    #[test]
    fn polar_round_trip_3d(dirs in prop::collection::vec(prop::array::uniform3(-1.0f64..1.0), 3..6)) {
        let mut pts: Vec<Vec<f64>> = Polytope::cross_polytope(3).vertices().to_vec();
        for d in &dirs {
            pts.push(d.to_vec());
            pts.push(d.iter().map(|x| -x).collect());
        }
        let Ok(p) = Polytope::from_vertices(pts) else { return Ok(()) };
        let back = polar_polytope(&polar_polytope(&p).unwrap()).unwrap();
        prop_assert!(same_vertex_set(p.vertices(), back.vertices(), 1e-9));
    }

    #[test]
    fn inscribed_sandwich(v in prop::array::uniform2(-10.0f64..10.0), which in 0usize..3, n in (2usize..40).prop_map(|k| 2 * k)) {
        let t = [tau(3, 2), Exponent::two(), Exponent::integer(3).unwrap()][which];
        let (p, r) = inscribed_polytope(t, n, 2).unwrap();
        let block = BlockNorm::from_ball(p).unwrap();
        let nu = t.conjugate();
        let exact = ltau_norm(&v, nu).unwrap();
        let poly = block_norm(&v, &block).unwrap();
        prop_assert!(r * poly <= exact + 1e-9);
        prop_assert!(exact <= poly + 1e-9);
    }
}

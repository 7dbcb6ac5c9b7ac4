use hyperfit_core::data::stars;
use hyperfit_core::geometry::{inscribed_polytope, residuals};
use hyperfit_core::solvers::{
    brute_force_fit_2d, disjunct_count, fit_block_norm, fit_block_norm_disjunct, fit_convex_descent, fit_lad, fit_lss,
    fit_ltau_approx, fit_vertical_general, permutation_oracle, sd_measure, DescentOptions, GridSpec, SolverTag,
};
use hyperfit_core::{
    fit, BlockNorm, Criterion, Dataset, Error, Exponent, FitResult, Hyperplane, NormSpec, SolverHints,
};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

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

fn norms() -> Vec<(&'static str, NormSpec)> {
    vec![
        ("vertical", NormSpec::Vertical),
        ("l1", NormSpec::l1()),
        ("linf", NormSpec::linf()),
        ("hex", NormSpec::Block(hexagon())),
    ]
}

fn random_planar(rng: &mut Xoshiro256PlusPlus, n: usize) -> Dataset {
    Dataset::from_rows((0..n).map(|_| vec![rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)]).collect()).unwrap()
}

fn phi_of(h: &Hyperplane, data: &Dataset, c: &Criterion, norm: &NormSpec) -> f64 {
    c.evaluate(&residuals(h, data.points(), norm).unwrap()).unwrap()
}

/// Checks the result's own bookkeeping against a fresh evaluation.
fn assert_consistent(r: &FitResult, data: &Dataset, c: &Criterion, norm: &NormSpec) {
    let phi = phi_of(&r.hyperplane, data, c, norm);
    assert!((phi - r.phi).abs() <= 1e-7 * phi.max(1e-12), "Φ {} vs re-evaluated {phi}", r.phi);
    if let Some((lo, hi)) = r.bounds {
        assert!(lo <= r.phi * (1.0 + 1e-12) && r.phi <= hi + 1e-9, "bounds ({lo}, {hi}) vs {}", r.phi);
    }
    if norm != &NormSpec::Vertical {
        let normal = r.hyperplane.normal();
        let first = normal.iter().find(|v| **v != 0.0).unwrap();
        assert!(*first > 0.0, "sign not canonical: {normal:?}");
    }
}

/// Normal equations solved by Gaussian elimination with partial pivoting.
fn least_squares_by_elimination(data: &Dataset) -> Vec<f64> {
    let d = data.dim();
    let mut m = vec![vec![0.0; d + 1]; d];
    for p in data.points() {
        let mut row = vec![1.0];
        row.extend_from_slice(&p.coords()[..d - 1]);
        let y = p.coords()[d - 1];
        for a in 0..d {
            for b in 0..d {
                m[a][b] += row[a] * row[b];
            }
            m[a][d] += row[a] * y;
        }
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap()).unwrap();
        m.swap(col, piv);
        for r in 0..d {
            if r != col {
                let f = m[r][col] / m[col][col];
                for k in col..=d {
                    m[r][k] -= f * m[col][k];
                }
            }
        }
    }
    (0..d).map(|i| m[i][d] / m[i][i]).collect()
}

#[test]
fn lss_matches_normal_equations() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    for _ in 0..30 {
        let data = random_planar(&mut rng, 6);
        let r = fit_lss(&data).unwrap();
        let (slope, intercept) = r.hyperplane.slope_intercept().unwrap();
        let want = least_squares_by_elimination(&data);
        assert!((intercept - want[0]).abs() <= 1e-8 && (slope - want[1]).abs() <= 1e-8);
        assert_eq!(r.tag, SolverTag::ClosedForm);
        assert_consistent(&r, &data, &Criterion::preset("SOS", 6, None).unwrap(), &NormSpec::Vertical);
    }
    // three coordinates
    let data = Dataset::from_rows(
        (0..12).map(|_| vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)]).collect(),
    )
    .unwrap();
    let beta = fit_lss(&data).unwrap().hyperplane.beta().to_vec();
    let want = least_squares_by_elimination(&data);
    for k in 0..3 {
        assert!((beta[k] - want[k]).abs() <= 1e-8);
    }
}

#[test]
fn lad_matches_grid() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    for _ in 0..10 {
        let data = random_planar(&mut rng, 8);
        let sum = Criterion::preset("SUM", 8, None).unwrap();
        let r = fit_lad(&data).unwrap();
        assert_eq!(r.tag, SolverTag::ExactLp);
        // independent scan: slope grid at 1e-3 around the LP slope, best offset by sorting
        let (s0, _) = r.hyperplane.slope_intercept().unwrap();
        let mut best = f64::INFINITY;
        for k in -2000..=2000 {
            let s = s0 + k as f64 * 1e-3;
            let mut off: Vec<f64> = data.points().iter().map(|p| p[1] - s * p[0]).collect();
            off.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let med = off[3];
            best = best.min(off.iter().map(|o| (o - med).abs()).sum());
        }
        assert!(r.phi <= best + 1e-9 && best - r.phi <= 1e-4, "LP {} grid {best}", r.phi);
        assert_consistent(&r, &data, &sum, &NormSpec::Vertical);
        let general = fit_vertical_general(&data, &sum, &SolverHints::default()).unwrap();
        assert!((general.phi - r.phi).abs() <= 1e-6);
    }
}

#[test]
fn lad_without_slopes_is_the_median() {
    // only the response varies: every fit is horizontal at the median
    let data =
        Dataset::from_rows((0..7).map(|i| vec![0.0, [5.0, -1.0, 3.0, 8.0, 0.5, 2.0, 9.0][i]]).collect()).unwrap();
    let r = fit_lad(&data);
    // a single x value leaves the slope free; the objective is still the median's
    if let Ok(r) = r {
        assert!(
            (r.phi - [5.0, -1.0, 3.0, 8.0, 0.5, 2.0, 9.0].iter().map(|v: &f64| (v - 3.0).abs()).sum::<f64>()).abs()
                < 1e-9
        );
    }
}

/// Chebyshev line of three points with distinct x (vertical residuals).
fn chebyshev3(p: [[f64; 2]; 3]) -> (f64, f64, f64) {
    let mut p = p;
    p.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
    let a = (p[2][1] - p[0][1]) / (p[2][0] - p[0][0]);
    let e = p[1][1] - (p[0][1] + a * (p[1][0] - p[0][0]));
    let b = p[0][1] - a * p[0][0] + e / 2.0;
    (a, b, e.abs() / 2.0)
}

#[test]
fn max_on_three_points_is_chebyshev() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
    for _ in 0..20 {
        let data = random_planar(&mut rng, 3);
        let pts: Vec<[f64; 2]> = data.points().iter().map(|p| [p[0], p[1]]).collect();
        let (a, b, v) = chebyshev3([pts[0], pts[1], pts[2]]);
        let r =
            fit_vertical_general(&data, &Criterion::preset("MAX", 3, None).unwrap(), &SolverHints::default()).unwrap();
        let (s, i) = r.hyperplane.slope_intercept().unwrap();
        assert!((r.phi - v).abs() <= 1e-9 && (s - a).abs() <= 1e-7 && (i - b).abs() <= 1e-7);
        // equidistant from all three points
        for res in &r.residuals {
            assert!((res - v).abs() <= 1e-9);
        }
    }
}

#[test]
fn lms_matches_chebyshev_triples() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    for _ in 0..6 {
        let data = random_planar(&mut rng, 8);
        let lms = Criterion::preset("LMS", 8, None).unwrap();
        let pts: Vec<[f64; 2]> = data.points().iter().map(|p| [p[0], p[1]]).collect();
        // the LMS optimum is the Chebyshev fit of its best h-subset, which is
        // fixed by three of its points
        let mut oracle = f64::INFINITY;
        for i in 0..8 {
            for j in i + 1..8 {
                for k in j + 1..8 {
                    let (a, b, _) = chebyshev3([pts[i], pts[j], pts[k]]);
                    let h = Hyperplane::from_slopes(b, &[a]).unwrap();
                    oracle = oracle.min(phi_of(&h, &data, &lms, &NormSpec::Vertical));
                }
            }
        }
        let r = fit(&data, &lms, &NormSpec::Vertical, &SolverHints::default()).unwrap();
        assert!((r.phi - oracle).abs() <= 1e-6, "LMS {} vs triples {oracle} ({:?})", r.phi, r.tag);
        assert!(r.tag.is_exact());
    }
}

fn check_against_permutations(seed: u64, sizes: &[usize], hints: &SolverHints, exact: SolverTag) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    for &n in sizes {
        let data = random_planar(&mut rng, n);
        let mut lambda: Vec<f64> =
            (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..2.0) }).collect();
        lambda[rng.gen_range(0..n)] = 1.0;
        let c = Criterion::new(lambda, 1u64.into()).unwrap();
        if c.is_monotone() {
            continue;
        }
        for (name, norm) in norms() {
            let ours = fit(&data, &c, &norm, hints).unwrap();
            let oracle = permutation_oracle(&data, &c, &norm).unwrap();
            assert!((ours.phi - oracle.phi).abs() <= 1e-6, "{name}: {} vs {} ({:?})", ours.phi, oracle.phi, ours.tag);
            assert_eq!(ours.tag, exact, "{name}");
            assert_consistent(&ours, &data, &c, &norm);
        }
    }
}

#[test]
fn milp_matches_permutation_enumeration() {
    let hints = SolverHints { vertex_budget: 0, enumeration_budget: 0, ..Default::default() };
    check_against_permutations(6, &[4, 5, 5, 5], &hints, SolverTag::ExactMilp);
}

#[test]
fn vertex_search_matches_permutation_enumeration() {
    check_against_permutations(16, &[5, 6, 6, 7], &SolverHints::default(), SolverTag::ExactEnumeration);
}

#[test]
fn disjunct_completeness() {
    let data = stars();
    let hints = SolverHints::default();
    for (name, param) in [("SUM", None), ("kC", Some(35.0)), ("SOS", None)] {
        let c = Criterion::preset(name, data.len(), param).unwrap();
        for b in [BlockNorm::l1(2), BlockNorm::linf(2), hexagon()] {
            let all = fit_block_norm(&data, &c, &b, &hints).unwrap();
            let min = (0..disjunct_count(&b))
                .map(|g| fit_block_norm_disjunct(&data, &c, &b, g, &hints).unwrap().phi)
                .fold(f64::INFINITY, f64::min);
            assert!((all.phi - min).abs() <= 1e-9 * min.max(1.0), "{name}: {} vs {min}", all.phi);
        }
    }
    assert!(
        fit_block_norm_disjunct(&data, &Criterion::preset("SUM", 47, None).unwrap(), &hexagon(), 9, &hints).is_err()
    );
}

#[test]
fn dilation_scales_the_optimum() {
    let data = stars();
    let hints = SolverHints::default();
    for (name, param, tol) in [("SUM", None, 1e-9), ("kC", Some(35.0), 1e-9), ("MAX", None, 1e-9), ("SOS", None, 1e-6)]
    {
        let c = Criterion::preset(name, data.len(), param).unwrap();
        let base = fit_block_norm(&data, &c, &hexagon(), &hints).unwrap();
        for mu in [0.5, 4.0] {
            let dilated = fit_block_norm(&data, &c, &hexagon().dilate(mu).unwrap(), &hints).unwrap();
            let expected = base.phi / mu.powf(c.p());
            assert!((dilated.phi - expected).abs() <= tol * expected, "{name} μ={mu}: {} vs {expected}", dilated.phi);
            // optima map onto each other: the dilated fit is optimal for the base norm
            let back = phi_of(&dilated.hyperplane, &data, &c, &NormSpec::Block(hexagon()));
            assert!((back - base.phi).abs() <= tol * base.phi, "{name} μ={mu}: {back} vs {}", base.phi);
        }
    }
}

#[test]
fn descent_agrees_with_exact_fits() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(7);
    for _ in 0..5 {
        let data = random_planar(&mut rng, 15);
        let sos = Criterion::preset("SOS", 15, None).unwrap();
        let d = fit_convex_descent(&data, &sos, &NormSpec::Vertical, &DescentOptions::default()).unwrap();
        let l = fit_lss(&data).unwrap();
        for (a, b) in d.hyperplane.beta().iter().zip(l.hyperplane.beta()) {
            assert!((a - b).abs() <= 1e-4, "{a} vs {b}");
        }
        let sum = Criterion::preset("SUM", 15, None).unwrap();
        let d = fit_convex_descent(&data, &sum, &NormSpec::Vertical, &DescentOptions::default()).unwrap();
        assert!((d.phi - fit_lad(&data).unwrap().phi).abs() <= 1e-5);
        // block norms, p = 1: subgradient steps never beat the LP and stay near it
        for b in [BlockNorm::l1(2), hexagon()] {
            let norm = NormSpec::Block(b.clone());
            let lp = fit_block_norm(&data, &sum, &b, &SolverHints::default()).unwrap();
            let d = fit_convex_descent(&data, &sum, &norm, &DescentOptions::default()).unwrap();
            assert!(d.phi >= lp.phi - 1e-9 && d.phi - lp.phi <= 0.05 * lp.phi, "{} vs {}", d.phi, lp.phi);
        }
        // block norm, p = 2 (smooth on each disjunct): within the grid oracle's certificate
        let norm = NormSpec::Block(hexagon());
        let d = fit_convex_descent(&data, &sos, &norm, &DescentOptions::default()).unwrap();
        let g = brute_force_fit_2d(&data, &sos, &norm, &GridSpec::default()).unwrap();
        let (lo, _) = g.bounds.unwrap();
        assert!(d.phi >= lo - 1e-9 && d.phi <= g.phi * (1.0 + 1e-6), "{} vs grid {}", d.phi, g.phi);
    }
    let med = Criterion::preset("MED", 15, None).unwrap();
    assert!(fit_convex_descent(&random_planar(&mut rng, 15), &med, &NormSpec::Vertical, &DescentOptions::default())
        .is_err());
}

#[test]
fn convex_along_segments() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(8);
    let data = random_planar(&mut rng, 12);
    for (name, param) in [("SUM", None), ("kC", Some(8.0)), ("SOS", None), ("1.5SUM", None), ("MAX", None)] {
        let c = Criterion::preset(name, 12, param).unwrap();
        for _ in 0..50 {
            let a = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let b = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let t: f64 = rng.gen();
            let f = |s: f64, i: f64| phi_of(&Hyperplane::from_slopes(i, &[s]).unwrap(), &data, &c, &NormSpec::Vertical);
            let mid = f(t * a[0] + (1.0 - t) * b[0], t * a[1] + (1.0 - t) * b[1]);
            let chord = t * f(a[0], a[1]) + (1.0 - t) * f(b[0], b[1]);
            assert!(mid <= chord + 1e-9 * chord.max(1.0), "{name}");
        }
    }
}

#[test]
fn collinear_data_fits_exactly() {
    let data =
        Dataset::from_rows((0..7).map(|i| vec![i as f64 - 2.0, 2.0 * (i as f64 - 2.0) + 1.0]).collect()).unwrap();
    let hints = SolverHints::default();
    let mut all_norms = norms();
    all_norms.push(("l2", NormSpec::LTau(Exponent::two())));
    for (name, param) in [
        ("SUM", None),
        ("MAX", None),
        ("MED", None),
        ("kC", Some(3.0)),
        ("AkC", Some(3.0)),
        ("SOS", None),
        ("1.5SUM", None),
        ("LMS", None),
        ("LTS", Some(0.5)),
    ] {
        let c = Criterion::preset(name, 7, param).unwrap();
        for (label, norm) in &all_norms {
            let r = fit(&data, &c, norm, &hints).unwrap();
            assert!(r.phi <= 1e-9, "{name}/{label}: Φ = {}", r.phi);
            assert!(r.gcod.unwrap() >= 1.0 - 1e-9, "{name}/{label}");
        }
    }
    // the grid oracle certifies zero, and finds it once slope 2 is a grid point
    let sum = Criterion::preset("SUM", 7, None).unwrap();
    let g = brute_force_fit_2d(&data, &sum, &NormSpec::Vertical, &GridSpec::default()).unwrap();
    assert!(g.bounds.unwrap().0 <= 1e-9);
    let on_grid = GridSpec { steps: 4, slope_range: Some((0.0, 4.0)), refine: false };
    assert!(brute_force_fit_2d(&data, &sum, &NormSpec::Vertical, &on_grid).unwrap().phi <= 1e-9);
}

#[test]
fn ltau_sandwich_and_sd() {
    let data = stars().scaled(10.0);
    let sum = Criterion::preset("SUM", data.len(), None).unwrap();
    let hints = SolverHints::default();
    for (num, den) in [(2, 1), (3, 1), (3, 2)] {
        let tau = Exponent::new(hyperfit_core::Rational::new(num, den)).unwrap();
        for n in [16, 80] {
            let r = fit_ltau_approx(&data, &sum, tau, n, &hints).unwrap();
            let (_, rp) = inscribed_polytope(tau, n, 2).unwrap();
            let (lo, hi) = r.bounds.unwrap();
            assert!(lo <= r.phi && r.phi <= hi, "τ={num}/{den} N={n}: {lo} ≤ {} ≤ {hi}", r.phi);
            assert!(hi / lo - 1.0 <= (1.0 / rp - 1.0) * (1.0 + 1e-9));
            assert_consistent(&r, &data, &sum, &NormSpec::LTau(tau));
        }
    }
    // exact dual ball: no approximation error
    let h = fit_lss(&data).unwrap().hyperplane;
    let linf = BlockNorm::linf(2);
    assert_eq!(
        sd_measure(&data, &h, Exponent::Infinite, &BlockNorm::from_polar(linf.polar().clone()).unwrap()).unwrap(),
        0.0
    );
    // finer polygons approximate better at a fixed hyperplane
    let sd: Vec<f64> = [16, 80, 320]
        .iter()
        .map(|&n| {
            let (p, _) = inscribed_polytope(Exponent::two(), n, 2).unwrap();
            sd_measure(&data, &h, Exponent::two(), &BlockNorm::from_polar(p).unwrap()).unwrap()
        })
        .collect();
    assert!(sd[0] > sd[1] && sd[1] > sd[2], "{sd:?}");
}

#[test]
fn dominates_random_hyperplanes() {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(9);
    let data = random_planar(&mut rng, 14);
    let hints = SolverHints::default();
    for (name, param) in
        [("SUM", None), ("MAX", None), ("kC", Some(0.5)), ("AkC", Some(0.5)), ("SOS", None), ("LTS", Some(0.75))]
    {
        let c = Criterion::preset(name, 14, param).unwrap();
        for (label, norm) in norms() {
            let r = fit(&data, &c, &norm, &hints).unwrap();
            assert_consistent(&r, &data, &c, &norm);
            let g = r.gcod.unwrap();
            assert!((-1e-9..=1.0 + 1e-9).contains(&g), "{name}/{label}: GCoD {g}");
            for _ in 0..100 {
                let h =
                    Hyperplane::new(vec![rng.gen_range(-5.0..5.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])
                        .unwrap();
                if norm == NormSpec::Vertical && h.beta()[2] == 0.0 {
                    continue;
                }
                let other = phi_of(&h, &data, &c, &norm);
                assert!(r.phi <= other * (1.0 + 1e-9), "{name}/{label}: {} beaten by {other}", r.phi);
            }
        }
    }
}

#[test]
fn agrees_with_grid_oracle_on_star_subsample() {
    let full = stars();
    let idx: Vec<usize> = (0..full.len()).step_by(3).take(16).collect();
    let data = full.subset(&idx).unwrap();
    let n = data.len();
    let hints = SolverHints::default();
    for (name, param) in
        [("SUM", None), ("MAX", None), ("kC", Some(0.5)), ("SOS", None), ("LMS", None), ("AkC", Some(0.5))]
    {
        let c = Criterion::preset(name, n, param).unwrap();
        for (label, norm) in norms() {
            let r = fit(&data, &c, &norm, &hints).unwrap();
            let g = brute_force_fit_2d(&data, &c, &norm, &GridSpec::default()).unwrap();
            let (lo, _) = g.bounds.unwrap();
            assert_eq!(g.tag, SolverTag::Oracle);
            assert!(r.phi <= g.phi + 1e-6 * g.phi.max(1e-9), "{name}/{label}: {} vs oracle {}", r.phi, g.phi);
            assert!(r.phi >= lo - 1e-9, "{name}/{label}: {} below certified {lo}", r.phi);
        }
    }
}

#[test]
fn max_line_is_shared_by_polyhedral_norms() {
    let data = stars();
    let max = Criterion::preset("MAX", data.len(), None).unwrap();
    let hints = SolverHints::default();
    let lines: Vec<(f64, f64)> = [NormSpec::l1(), NormSpec::linf(), NormSpec::Block(hexagon())]
        .iter()
        .map(|norm| {
            let b = fit(&data, &max, norm, &hints).unwrap().hyperplane.vertical_form().unwrap();
            b.slope_intercept().unwrap()
        })
        .collect();
    for (s, i) in &lines {
        assert!((s + 3.230769).abs() <= 1e-4 && (i - 18.77577).abs() <= 1e-4, "{s} {i}");
    }
}

#[test]
fn input_errors() {
    let data = stars();
    let c = Criterion::preset("SUM", 10, None).unwrap();
    assert!(matches!(fit(&data, &c, &NormSpec::Vertical, &SolverHints::default()), Err(Error::InvalidArgument(_))));
    let c = Criterion::preset("SUM", 47, None).unwrap();
    assert!(fit_block_norm(&data, &c, &BlockNorm::l1(3), &SolverHints::default()).is_err());
    assert!(permutation_oracle(&data, &c, &NormSpec::Vertical).is_err());
}

#[test]
fn smooth_block_fits_on_badly_scaled_data() {
    // coordinates of order 100 with outliers: first-order steps alone stall here
    let data = hyperfit_core::evaluation::synthetic_generate(30, 2, hyperfit_core::evaluation::Corruption::Y, 6)
        .unwrap()
        .dataset()
        .unwrap();
    let hints = SolverHints::default();
    for name in ["SOS", "1.5SUM"] {
        let c = Criterion::preset(name, 30, None).unwrap();
        for (label, norm) in norms().into_iter().skip(1) {
            let r = fit(&data, &c, &norm, &hints).unwrap();
            let g = brute_force_fit_2d(&data, &c, &norm, &GridSpec::default()).unwrap();
            let (lo, _) = g.bounds.unwrap();
            assert!(r.phi <= g.phi * (1.0 + 1e-6), "{name}/{label}: {} vs grid {}", r.phi, g.phi);
            assert!(r.phi >= lo * (1.0 - 1e-9), "{name}/{label}: {} below certified {lo}", r.phi);
        }
    }
}

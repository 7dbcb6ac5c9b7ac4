//! Hyperplane fitting under ordered-median criteria.
//!
//! Every residual kind reduces to a finite list of convex slices on which
//! residuals are affine in the parameters: a single slice for vertical
//! residuals, one per facet of the polar ball (up to sign) for block norms.
//! Nondecreasing `λ` makes each slice problem convex (an LP for `p = 1`);
//! other `λ` are handled by MILP, subset enumeration or local search.

mod arrangement;
mod descent;
mod engine;
mod formulation;
mod oracle;
mod slice;

use std::fmt;

use hyperfit_lp::MixedIntegerProgram;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::criteria::{Criterion, Preset};
use crate::error::{invalid, Error, Result};
use crate::exponent::{pow_rational, Exponent};
use crate::geometry::{
    dual_norm, inscribed_polytope, residuals, BlockNorm, Dataset, Hyperplane, NormSpec, Normalization,
};
use crate::omp1d::{gcod, solve_omp};
use engine::{Engine, Evaluator, Outcome};
use slice::{block_slices, Slice};

pub use formulation::Formulation;
pub use oracle::{brute_force_fit_2d, permutation_oracle, GridSpec};

/// How a result was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverTag {
    ClosedForm,
    ExactLp,
    ExactMilp,
    ExactEnumeration,
    /// Convex descent; optimal up to the descent tolerance.
    Descent,
    /// Multistart local search; no optimality certificate.
    LocalSearch,
    /// Branch and bound stopped at its node limit.
    Incumbent,
    /// Brute-force grid search.
    Oracle,
}

impl SolverTag {
    pub fn as_str(self) -> &'static str {
        match self {
            SolverTag::ClosedForm => "closed-form",
            SolverTag::ExactLp => "exact-lp",
            SolverTag::ExactMilp => "exact-milp",
            SolverTag::ExactEnumeration => "exact-enumeration",
            SolverTag::Descent => "descent",
            SolverTag::LocalSearch => "local-search",
            SolverTag::Incumbent => "incumbent",
            SolverTag::Oracle => "oracle",
        }
    }

    /// Whether the solver proved optimality (for the model it solved).
    pub fn is_exact(self) -> bool {
        matches!(self, SolverTag::ClosedForm | SolverTag::ExactLp | SolverTag::ExactMilp | SolverTag::ExactEnumeration)
    }
}

impl fmt::Display for SolverTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tuning knobs shared by all solvers.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverHints {
    /// Starting points refined by local search.
    pub multistart: usize,
    pub seed: u64,
    /// Branch-and-bound node budget per MILP.
    pub node_limit: usize,
    /// Largest `n` for which non-monotone `p = 1` problems go to the MILP.
    pub milp_max_n: usize,
    /// Largest `subsets × slices` count solved by exhaustive enumeration.
    pub enumeration_budget: usize,
    /// Largest number of arrangement vertices visited by the exact `p = 1`
    /// vertex search for non-monotone `λ` (0 disables it).
    pub vertex_budget: usize,
    pub descent_iterations: usize,
    /// Vertices of the polygon approximating an ℓτ ball.
    pub approx_vertices: usize,
}

impl Default for SolverHints {
    fn default() -> Self {
        Self {
            multistart: 16,
            seed: 0,
            node_limit: 100_000,
            milp_max_n: 8,
            enumeration_budget: 4_000,
            vertex_budget: 2_000_000,
            descent_iterations: 5_000,
            approx_vertices: 320,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Normalized: `β_d = −1` for vertical residuals, unit dual norm of the
    /// normal vector (first nonzero entry positive) otherwise.
    pub hyperplane: Hyperplane,
    /// `Φ` at the returned hyperplane under the requested residuals.
    pub phi: f64,
    /// `None` when the reference objective is zero.
    pub gcod: Option<f64>,
    /// Certified interval containing the optimal value, when available.
    pub bounds: Option<(f64, f64)>,
    pub tag: SolverTag,
    /// LP, MILP or descent solves performed.
    pub subproblems: usize,
    pub residuals: Vec<f64>,
    /// Squared-deviation measure of a polyhedral ℓτ approximation.
    pub sd: Option<f64>,
}

/// Fits a hyperplane, dispatching on the residual kind.
pub fn fit(dataset: &Dataset, criterion: &Criterion, norm: &NormSpec, hints: &SolverHints) -> Result<FitResult> {
    match norm {
        NormSpec::Vertical => fit_vertical_general(dataset, criterion, hints),
        NormSpec::LTau(t) if t.is_one() || t.is_infinite() => {
            let block = norm.as_block(dataset.dim()).expect("ℓ1 and ℓ∞ are polyhedral");
            fit_with_block(dataset, criterion, &block, norm, None, hints)
        }
        NormSpec::LTau(t) => fit_ltau_approx(dataset, criterion, *t, hints.approx_vertices, hints),
        NormSpec::Block(b) => fit_block_norm(dataset, criterion, b, hints),
    }
}

fn check_sizes(dataset: &Dataset, criterion: &Criterion) -> Result<()> {
    if criterion.len() != dataset.len() {
        return Err(invalid(format!("criterion has {} weights for {} points", criterion.len(), dataset.len())));
    }
    Ok(())
}

fn centred(dataset: &Dataset) -> (Dataset, Vec<f64>) {
    let c = dataset.centroid();
    (dataset.map_coords(|j, v| v - c[j]), c)
}

fn uncentre(mut beta: Vec<f64>, centre: &[f64]) -> Vec<f64> {
    let shift: f64 = beta[1..].iter().zip(centre).map(|(b, c)| b * c).sum();
    beta[0] -= shift;
    beta
}

/// Normalizes `beta` for `norm` and evaluates it on the data.
fn finish(
    dataset: &Dataset,
    criterion: &Criterion,
    norm: &NormSpec,
    beta: Vec<f64>,
    tag: SolverTag,
    subproblems: usize,
) -> Result<FitResult> {
    let raw = Hyperplane::new(beta)?;
    let hyperplane = match norm {
        NormSpec::Vertical => raw.vertical_form()?,
        _ => {
            let d = dual_norm(raw.normal(), norm)?;
            if !(d > 0.0) {
                return Err(Error::DegenerateHyperplane("zero dual norm".into()));
            }
            raw.scaled(1.0 / d, Normalization::DualUnit).canonical_sign()
        }
    };
    let res = residuals(&hyperplane, dataset.points(), norm)?;
    let phi = criterion.evaluate(&res)?;
    let gcod = match gcod(phi, dataset, criterion, norm) {
        Ok(g) => Some(g),
        Err(Error::DegenerateReference) => None,
        Err(e) => return Err(e),
    };
    Ok(FitResult { hyperplane, phi, gcod, bounds: None, tag, subproblems, residuals: res, sd: None })
}

fn run(engine: &Engine, monotone: bool) -> Result<Outcome> {
    if monotone {
        engine.solve_monotone()
    } else {
        engine.solve_general()
    }
}

/// Ordinary least squares (vertical residuals, `SOS`), in closed form.
pub fn fit_lss(dataset: &Dataset) -> Result<FitResult> {
    let criterion = Preset::Sos.instantiate(dataset.len())?;
    let hints = SolverHints::default();
    fit_vertical_general(dataset, &criterion, &hints)
}

/// Least absolute deviations (vertical residuals, `SUM`), by LP.
pub fn fit_lad(dataset: &Dataset) -> Result<FitResult> {
    let criterion = Preset::Sum.instantiate(dataset.len())?;
    fit_vertical_general(dataset, &criterion, &SolverHints::default())
}

/// Any criterion with vertical residuals.
pub fn fit_vertical_general(dataset: &Dataset, criterion: &Criterion, hints: &SolverHints) -> Result<FitResult> {
    check_sizes(dataset, criterion)?;
    let (data, centre) = centred(dataset);
    let slices = vec![Slice::Vertical { dim: dataset.dim() }];
    let engine = Engine::new(data, criterion, slices, Evaluator::Vertical, hints);
    let out = run(&engine, criterion.is_monotone())?;
    finish(dataset, criterion, &NormSpec::Vertical, uncentre(out.beta, &centre), out.tag, engine.subproblems.get())
}

/// Slices and residual evaluator for vertical or polyhedral residuals.
fn slices_for(norm: &NormSpec, dim: usize) -> Result<(Vec<Slice>, Evaluator)> {
    match norm {
        NormSpec::Vertical => Ok((vec![Slice::Vertical { dim }], Evaluator::Vertical)),
        _ => {
            let block =
                norm.as_block(dim).ok_or_else(|| Error::Unsupported("ℓτ with 1 < τ < ∞ is not polyhedral".into()))?;
            if block.dim() != dim {
                return Err(invalid(format!("block norm has dimension {}, data {dim}", block.dim())));
            }
            Ok((block_slices(&block), block_evaluator(&block)))
        }
    }
}

fn block_evaluator(block: &BlockNorm) -> Evaluator {
    Evaluator::Block { ball: block.ball().vertices().to_vec(), polar: block.polar().vertices().to_vec() }
}

/// Solves with `block` and reports under `report` (which may be the same
/// norm, or an ℓ1/ℓ∞ norm equal to it). `only` restricts to one disjunct.
fn fit_with_block(
    dataset: &Dataset,
    criterion: &Criterion,
    block: &BlockNorm,
    report: &NormSpec,
    only: Option<usize>,
    hints: &SolverHints,
) -> Result<FitResult> {
    let (out, subproblems) = solve_block(dataset, criterion, block, only, hints)?;
    finish(dataset, criterion, report, out.0, out.1, subproblems)
}

fn solve_block(
    dataset: &Dataset,
    criterion: &Criterion,
    block: &BlockNorm,
    only: Option<usize>,
    hints: &SolverHints,
) -> Result<((Vec<f64>, SolverTag), usize)> {
    check_sizes(dataset, criterion)?;
    if block.dim() != dataset.dim() {
        return Err(invalid(format!("block norm has dimension {}, data {}", block.dim(), dataset.dim())));
    }
    let mut slices = block_slices(block);
    if let Some(g) = only {
        if g >= slices.len() {
            return Err(invalid(format!("disjunct {g} out of range 0..{}", slices.len())));
        }
        slices = vec![slices.swap_remove(g)];
    }
    let (data, centre) = centred(dataset);
    let engine = Engine::new(data, criterion, slices, block_evaluator(block), hints);
    let out = run(&engine, criterion.is_monotone())?;
    Ok(((uncentre(out.beta, &centre), out.tag), engine.subproblems.get()))
}

/// Block-norm residuals via the disjunctive decomposition: one subproblem
/// per facet of the polar ball, up to sign.
pub fn fit_block_norm(
    dataset: &Dataset,
    criterion: &Criterion,
    norm: &BlockNorm,
    hints: &SolverHints,
) -> Result<FitResult> {
    fit_with_block(dataset, criterion, norm, &NormSpec::Block(norm.clone()), None, hints)
}

/// Number of disjuncts [`fit_block_norm`] solves for `norm`.
pub fn disjunct_count(norm: &BlockNorm) -> usize {
    block_slices(norm).len()
}

/// The best hyperplane whose normal lies on disjunct `index` alone.
pub fn fit_block_norm_disjunct(
    dataset: &Dataset,
    criterion: &Criterion,
    norm: &BlockNorm,
    index: usize,
    hints: &SolverHints,
) -> Result<FitResult> {
    fit_with_block(dataset, criterion, norm, &NormSpec::Block(norm.clone()), Some(index), hints)
}

/// ℓτ residuals (`d = 2`) through an inscribed polygon with `n_vertices`
/// vertices. The returned bounds `(ρ*, ρ*/r_P^p)` bracket the optimal ℓτ
/// objective, where `ρ*` is the polygonal optimum and `r_P` the inradius.
pub fn fit_ltau_approx(
    dataset: &Dataset,
    criterion: &Criterion,
    tau: Exponent,
    n_vertices: usize,
    hints: &SolverHints,
) -> Result<FitResult> {
    let (poly, r) = inscribed_polytope(tau, n_vertices, dataset.dim())?;
    let block = BlockNorm::from_polar(poly)?;
    let ((beta, tag), subproblems) = solve_block(dataset, criterion, &block, None, hints)?;
    let surrogate = finish(dataset, criterion, &NormSpec::Block(block.clone()), beta.clone(), tag, subproblems)?;
    let rho = surrogate.phi;
    let mut result = finish(dataset, criterion, &NormSpec::LTau(tau), beta, tag, subproblems)?;
    result.bounds = Some((rho, rho / pow_rational(r, criterion.power())));
    result.sd = Some(sd_measure(dataset, &result.hyperplane, tau, &block)?);
    Ok(result)
}

/// `Σ_i (D_τ − D_P)² / D_τ` over points with a positive ℓτ residual: how far
/// the polygonal residuals deviate from the exact ones.
pub fn sd_measure(dataset: &Dataset, hyperplane: &Hyperplane, tau: Exponent, approx: &BlockNorm) -> Result<f64> {
    let exact = residuals(hyperplane, dataset.points(), &NormSpec::LTau(tau))?;
    let poly = residuals(hyperplane, dataset.points(), &NormSpec::Block(approx.clone()))?;
    Ok(exact.iter().zip(&poly).filter(|(e, _)| **e > 0.0).map(|(e, p)| (e - p).powi(2) / e).sum())
}

/// Options for [`fit_convex_descent`].
#[derive(Debug, Clone, PartialEq)]
pub struct DescentOptions {
    /// Restrict to one disjunct (block norms only).
    pub disjunct: Option<usize>,
    pub iterations: usize,
    /// Starts per slice: the slice centre, least-squares and least-absolute
    /// fits (vertical residuals), then seeded random points.
    pub multistart: usize,
    pub seed: u64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self { disjunct: None, iterations: 5_000, multistart: 4, seed: 0 }
    }
}

/// Convex descent on every slice, independently of the LP machinery.
/// Requires nondecreasing `λ`.
pub fn fit_convex_descent(
    dataset: &Dataset,
    criterion: &Criterion,
    norm: &NormSpec,
    opts: &DescentOptions,
) -> Result<FitResult> {
    check_sizes(dataset, criterion)?;
    if !criterion.is_monotone() {
        return Err(invalid("convex descent needs nondecreasing λ"));
    }
    let (slices, eval) = slices_for(norm, dataset.dim())?;
    let slices = match opts.disjunct {
        Some(g) => vec![slices.get(g).cloned().ok_or_else(|| invalid("disjunct out of range"))?],
        None => slices,
    };
    let (data, centre) = centred(dataset);
    let n = dataset.len();
    let spread = data.points().iter().flat_map(|p| p.coords()).fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
    let hints = SolverHints { descent_iterations: opts.iterations, ..Default::default() };
    let engine = Engine::new(data, criterion, slices, eval, &hints);
    let active: Vec<(usize, f64)> = (0..n).map(|i| (i, 1.0)).collect();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(opts.seed);
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut runs = 0;
    for (slice, sd) in engine.slices.iter().zip(&engine.slice_data) {
        let q = slice.num_params();
        let mut thetas = vec![slice.centre()];
        if let Slice::Vertical { dim } = slice {
            if let Some(z) = descent::weighted_least_squares(sd, &active) {
                thetas.push(z[1..].to_vec());
            }
            let lad = fit_lad(&engine.data)?;
            thetas.push(lad.hyperplane.beta()[1..*dim].to_vec());
        }
        while thetas.len() < opts.multistart.max(1) {
            thetas.push(if slice.is_simplex() {
                let w: Vec<f64> = (0..q).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
                let total: f64 = w.iter().sum();
                w.into_iter().map(|x| x / total).collect()
            } else {
                (0..q).map(|_| 4.0 * rng.gen::<f64>() - 2.0).collect()
            });
        }
        thetas.truncate(opts.multistart.max(1));
        let objective = descent::SliceObjective {
            data: sd,
            active: &active,
            lambda: criterion.lambda(),
            p: criterion.p(),
            simplex: slice.is_simplex(),
        };
        for theta in thetas {
            runs += 1;
            let offsets: Vec<f64> = (0..n).map(|i| -sd.signed(i, 0.0, &theta)).collect();
            let mut z = vec![solve_omp(&offsets, criterion)?.beta0];
            z.extend(theta);
            let (mut z, mut v) = objective.minimize(&z, opts.iterations, 0.1 * spread);
            if criterion.p() > 1.0 {
                (z, v) = objective.newton(&z, 100);
            }
            if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                best = Some((slice.beta(z[0], &z[1..]), v));
            }
        }
    }
    let (beta, _) = best.ok_or_else(|| Error::Solver("no slices".into()))?;
    finish(dataset, criterion, norm, uncentre(beta, &centre), SolverTag::Descent, runs)
}

/// The per-disjunct models a `p = 1` fit solves, in original coordinates:
/// LPs for nondecreasing `λ`, MILPs otherwise.
pub fn disjunct_models(
    dataset: &Dataset,
    criterion: &Criterion,
    norm: &NormSpec,
    formulation: Formulation,
) -> Result<Vec<MixedIntegerProgram>> {
    check_sizes(dataset, criterion)?;
    if !criterion.power().is_one() {
        return Err(Error::Unsupported("only p = 1 fits are linear programs".into()));
    }
    let (slices, eval) = slices_for(norm, dataset.dim())?;
    let hints = SolverHints::default();
    let engine = Engine::new(dataset.clone(), criterion, slices, eval, &hints);
    let active: Vec<(usize, f64)> = (0..dataset.len()).map(|i| (i, 1.0)).collect();
    let big_m = if criterion.is_monotone() {
        None
    } else {
        Some(engine.big_m().ok_or_else(|| Error::Unsupported("no valid big-M bound for this residual kind".into()))?)
    };
    engine
        .slices
        .iter()
        .zip(&engine.slice_data)
        .map(|(s, sd)| match big_m {
            None => formulation::monotone_model(s, sd, &active, criterion.lambda(), formulation).map(|m| m.mip),
            Some(m) => formulation::ordered_milp(s, sd, criterion.lambda(), m).map(|m| m.mip),
        })
        .collect()
}

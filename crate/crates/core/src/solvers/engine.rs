//! The shared search machinery: a list of slices, a residual evaluator for
//! arbitrary hyperplanes, and exact / heuristic strategies over them.

use std::cell::Cell;
use std::collections::HashSet;

use hyperfit_lp::{solve_lp, solve_milp, MilpOptions, SolveStatus};
use num_traits::One;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::criteria::Criterion;
use crate::error::{Error, Result};
use crate::exponent::Rational;
use crate::geometry::{dot, Dataset};
use crate::omp1d::solve_omp;
use crate::solvers::arrangement::{best_vertex, vertex_count};
use crate::solvers::descent::{weighted_least_squares, SliceObjective};
use crate::solvers::formulation::{monotone_model, rcentrum_milp, Formulation};
use crate::solvers::slice::{Slice, SliceData};
use crate::solvers::{SolverHints, SolverTag};

/// How the residual of an arbitrary `β` is measured inside the engine.
#[derive(Debug, Clone)]
pub(crate) enum Evaluator {
    Vertical,
    /// Block norm given by the vertices of its ball and of its polar.
    Block {
        ball: Vec<Vec<f64>>,
        polar: Vec<Vec<f64>>,
    },
}

impl Evaluator {
    /// `‖β_{-0}‖_*`, or `|β_d|` for vertical residuals.
    fn scale(&self, beta: &[f64]) -> f64 {
        let normal = &beta[1..];
        match self {
            Evaluator::Vertical => normal[normal.len() - 1].abs(),
            Evaluator::Block { ball, .. } => ball.iter().map(|b| dot(b, normal).abs()).fold(0.0, f64::max),
        }
    }
}

pub(crate) struct Outcome {
    /// Coefficients in centred coordinates.
    pub beta: Vec<f64>,
    pub tag: SolverTag,
}

pub(crate) struct Engine<'a> {
    pub data: Dataset,
    pub criterion: &'a Criterion,
    pub slices: Vec<Slice>,
    pub slice_data: Vec<SliceData>,
    eval: Evaluator,
    hints: &'a SolverHints,
    spread: f64,
    pub subproblems: Cell<usize>,
}

type Active = Vec<(usize, f64)>;

impl<'a> Engine<'a> {
    /// `data` must already be centred.
    pub fn new(
        data: Dataset,
        criterion: &'a Criterion,
        slices: Vec<Slice>,
        eval: Evaluator,
        hints: &'a SolverHints,
    ) -> Self {
        let slice_data = slices.iter().map(|s| s.features(&data)).collect();
        let spread = data.points().iter().flat_map(|p| p.coords()).fold(0.0f64, |m, x| m.max(x.abs())).max(1e-12);
        Self { data, criterion, slices, slice_data, eval, hints, spread, subproblems: Cell::new(0) }
    }

    fn bump(&self) {
        self.subproblems.set(self.subproblems.get() + 1);
    }

    pub fn residuals(&self, beta: &[f64]) -> Option<Vec<f64>> {
        let s = self.eval.scale(beta);
        if !(s > 0.0) || beta.iter().any(|b| !b.is_finite()) {
            return None;
        }
        Some(self.data.points().iter().map(|p| (beta[0] + dot(&beta[1..], p.coords())).abs() / s).collect())
    }

    pub fn phi_with(&self, criterion: &Criterion, beta: &[f64]) -> f64 {
        match self.residuals(beta) {
            Some(mut r) => criterion.evaluate_in_place(&mut r),
            None => f64::INFINITY,
        }
    }

    /// Best solution over one slice of `Σ_j λ_j (s ⊙ ε)_(j)^p` restricted to
    /// the active points; `lambda` is nondecreasing. Returns the coefficient
    /// vector and the slice objective.
    pub fn solve_slice(
        &self,
        s: usize,
        active: &[(usize, f64)],
        lambda: &[f64],
        p: Rational,
    ) -> Result<Option<(Vec<f64>, f64)>> {
        let slice = &self.slices[s];
        let data = &self.slice_data[s];
        let objective =
            SliceObjective { data, active, lambda, p: crate::exponent::rational_f64(p), simplex: slice.is_simplex() };
        let mut buf = Vec::new();
        let const_lambda = lambda.windows(2).all(|w| w[0] == w[1]);
        if p == Rational::from_integer(2) && !slice.is_simplex() && const_lambda {
            self.bump();
            let Some(z) = weighted_least_squares(data, active) else { return Ok(None) };
            let v = objective.value(&z, &mut buf);
            return Ok(Some((slice.beta(z[0], &z[1..]), v)));
        }
        self.bump();
        let model = monotone_model(slice, data, active, lambda, Formulation::Compact)?;
        let start = match solve_lp(model.mip.lp())? {
            SolveStatus::Optimal(sol) => model.extract(&sol.x),
            SolveStatus::Infeasible => return Ok(None),
            other => return Err(Error::Solver(format!("slice LP did not solve: {other:?}"))),
        };
        let mut z = vec![start.0];
        z.extend(start.1);
        if p.is_one() {
            let v = objective.value(&z, &mut buf);
            return Ok(Some((slice.beta(z[0], &z[1..]), v)));
        }
        // Newton for the smooth part, first-order steps across kinks, Newton again
        let (z, _) = objective.newton(&z, 100);
        let (z, _) = objective.minimize(&z, self.hints.descent_iterations, 0.1 * self.spread);
        let (z, v) = objective.newton(&z, 100);
        Ok(Some((slice.beta(z[0], &z[1..]), v)))
    }

    /// Best over all slices.
    pub fn solve_subset(
        &self,
        active: &[(usize, f64)],
        lambda: &[f64],
        p: Rational,
    ) -> Result<Option<(Vec<f64>, f64)>> {
        let mut best: Option<(Vec<f64>, f64)> = None;
        for s in 0..self.slices.len() {
            if let Some((b, v)) = self.solve_slice(s, active, lambda, p)? {
                if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                    best = Some((b, v));
                }
            }
        }
        Ok(best)
    }

    fn all_active(&self) -> Active {
        (0..self.data.len()).map(|i| (i, 1.0)).collect()
    }

    /// Nondecreasing `λ`: the problem is convex on each slice.
    pub fn solve_monotone(&self) -> Result<Outcome> {
        let c = self.criterion;
        let (beta, _) = self
            .solve_subset(&self.all_active(), c.lambda(), c.power())?
            .ok_or_else(|| Error::Solver("no slice produced a solution".into()))?;
        let closed_form = c.power() == Rational::from_integer(2)
            && self.slices.iter().all(|s| !s.is_simplex())
            && c.lambda().windows(2).all(|w| w[0] == w[1]);
        let tag = if closed_form {
            SolverTag::ClosedForm
        } else if c.power().is_one() {
            SolverTag::ExactLp
        } else {
            SolverTag::Descent
        };
        Ok(Outcome { beta, tag })
    }

    /// Arbitrary `λ ≥ 0`.
    pub fn solve_general(&self) -> Result<Outcome> {
        let c = self.criterion;
        let n = self.data.len();
        // With a single nonzero weight the minimizer does not depend on p.
        let effective = if c.single_position().is_some() && !c.power().is_one() {
            Criterion::new(c.lambda().to_vec(), Rational::one())?
        } else {
            c.clone()
        };
        let p = effective.power();
        let trimmed = effective.trimmed_monotone_len();
        if let Some(m) = trimmed {
            let work = binomial(n, m).saturating_mul(self.slices.len() as u128);
            if work <= self.hints.enumeration_budget as u128 {
                return self.enumerate_subsets(m, &effective.lambda()[..m], p);
            }
        }
        if let Some(out) = self.enumerate_vertices(&effective)? {
            return Ok(out);
        }
        let heuristic = self.local_search(&effective, trimmed)?;
        if p.is_one() && n <= self.hints.milp_max_n {
            if let Some(m) = self.big_m() {
                return self.solve_milp(&effective, m, heuristic);
            }
        }
        Ok(heuristic)
    }

    /// Exact `p = 1` search over arrangement vertices, when within budget.
    fn enumerate_vertices(&self, c: &Criterion) -> Result<Option<Outcome>> {
        if !c.power().is_one() {
            return Ok(None);
        }
        let n = self.data.len();
        let total = self.slices.iter().fold(0u128, |acc, s| acc.saturating_add(vertex_count(s, n)));
        if total > self.hints.vertex_budget as u128 {
            return Ok(None);
        }
        let mut best: Option<(f64, Vec<f64>)> = None;
        for (slice, sd) in self.slices.iter().zip(&self.slice_data) {
            self.bump();
            let Some((v, b0, theta)) = best_vertex(slice, sd, c.lambda()) else { return Ok(None) };
            if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
                best = Some((v, slice.beta(b0, &theta)));
            }
        }
        Ok(best.map(|(_, beta)| Outcome { beta, tag: SolverTag::ExactEnumeration }))
    }

    /// Exact per-slice MILPs, pruned by the value of a known solution.
    fn solve_milp(&self, c: &Criterion, big_m: f64, start: Outcome) -> Result<Outcome> {
        let mut best_value = self.phi_with(c, &start.beta);
        let mut beta = start.beta;
        let mut complete = true;
        for (s, slice) in self.slices.iter().enumerate() {
            self.bump();
            let model = rcentrum_milp(slice, &self.slice_data[s], c.lambda(), big_m)?;
            let opts = MilpOptions {
                node_limit: self.hints.node_limit,
                cutoff: best_value.is_finite().then_some(best_value),
                ..Default::default()
            };
            let sol = match solve_milp(&model.mip, &opts)? {
                SolveStatus::Optimal(sol) => sol,
                SolveStatus::IterationLimit(inc) => {
                    complete = false;
                    match inc {
                        Some(sol) => sol,
                        None => continue,
                    }
                }
                // nothing better than the cutoff on this slice
                SolveStatus::Infeasible => continue,
                SolveStatus::Unbounded => return Err(Error::Solver("ordered MILP unbounded".into())),
            };
            let (b0, theta) = model.extract(&sol.x);
            let candidate = slice.beta(b0, &theta);
            let v = self.phi_with(c, &candidate);
            if v < best_value {
                best_value = v;
                beta = candidate;
            }
        }
        Ok(Outcome { beta, tag: if complete { SolverTag::ExactMilp } else { SolverTag::Incumbent } })
    }

    /// A residual bound valid for some optimal hyperplane.
    pub fn big_m(&self) -> Option<f64> {
        let pts = self.data.points();
        let m = match &self.eval {
            Evaluator::Block { polar, .. } => {
                // some optimal hyperplane meets the convex hull of the data,
                // so no residual exceeds the diameter
                let mut diam: f64 = 0.0;
                for a in pts {
                    for b in pts {
                        let diff: Vec<f64> = a.coords().iter().zip(b.coords()).map(|(x, y)| x - y).collect();
                        diam = diam.max(polar.iter().map(|v| dot(v, &diff).abs()).fold(0.0, f64::max));
                    }
                }
                diam
            }
            Evaluator::Vertical if self.data.dim() == 2 => {
                // optimal lines pass through a "centre" (point or pairwise
                // midpoint) with a slope realised by two centres
                let mut centres: Vec<[f64; 2]> = pts.iter().map(|p| [p[0], p[1]]).collect();
                for i in 0..pts.len() {
                    for j in i + 1..pts.len() {
                        centres.push([(pts[i][0] + pts[j][0]) / 2.0, (pts[i][1] + pts[j][1]) / 2.0]);
                    }
                }
                let mut slope: f64 = 0.0;
                for a in &centres {
                    for b in &centres {
                        let dx = b[0] - a[0];
                        if dx.abs() > 1e-12 * self.spread {
                            slope = slope.max(((b[1] - a[1]) / dx).abs());
                        }
                    }
                }
                let range = |j: usize| {
                    let (lo, hi) =
                        pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| (l.min(p[j]), h.max(p[j])));
                    hi - lo
                };
                range(1) + slope * range(0)
            }
            Evaluator::Vertical => return None,
        };
        Some(m * (1.0 + 1e-6) + 1e-9)
    }

    fn enumerate_subsets(&self, m: usize, lambda: &[f64], p: Rational) -> Result<Outcome> {
        let n = self.data.len();
        let mut best: Option<(Vec<f64>, f64)> = None;
        let mut idx: Vec<usize> = (0..m).collect();
        loop {
            let active: Active = idx.iter().map(|&i| (i, 1.0)).collect();
            if let Some((b, v)) = self.solve_subset(&active, lambda, p)? {
                if best.as_ref().is_none_or(|(_, bv)| v < *bv) {
                    best = Some((b, v));
                }
            }
            // next combination in lexicographic order
            let Some(k) = (0..m).rev().find(|&k| idx[k] < n - m + k) else { break };
            idx[k] += 1;
            for l in k + 1..m {
                idx[l] = idx[l - 1] + 1;
            }
        }
        let (beta, _) = best.ok_or_else(|| Error::Solver("subset enumeration found nothing".into()))?;
        let exact = p.is_one()
            || self.slices.iter().all(|s| !s.is_simplex())
                && p == Rational::from_integer(2)
                && lambda.windows(2).all(|w| w[0] == w[1]);
        Ok(Outcome { beta, tag: if exact { SolverTag::ExactEnumeration } else { SolverTag::Descent } })
    }

    /// Multistart local search. With `trimmed = Some(m)` each step refits the
    /// `m` points with the smallest residuals (a concentration step);
    /// otherwise it refits with the sort permutation held fixed.
    fn local_search(&self, c: &Criterion, trimmed: Option<usize>) -> Result<Outcome> {
        let n = self.data.len();
        let mut scored: Vec<(f64, Vec<f64>)> = self
            .starting_points()
            .into_iter()
            .map(|b| (self.phi_with(c, &b), b))
            .filter(|(v, _)| v.is_finite())
            .collect();
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        let cheap = self.slices.iter().all(|s| !s.is_simplex()) && c.power() == Rational::from_integer(2);
        let budget = self.hints.multistart.max(1) * if cheap { 8 } else { 1 };
        let mut visited: HashSet<Vec<usize>> = HashSet::new();
        let mut best = scored.first().cloned().ok_or_else(|| Error::Solver("no starting hyperplanes".into()))?;
        let order = |beta: &[f64]| -> Vec<usize> {
            let r = self.residuals(beta).unwrap_or_else(|| vec![0.0; n]);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| r[a].total_cmp(&r[b]).then(a.cmp(&b)));
            idx
        };
        let mut starts = 0;
        for (v0, b0) in scored {
            if starts >= budget {
                break;
            }
            let key = |beta: &[f64]| -> Vec<usize> {
                let o = order(beta);
                match trimmed {
                    Some(m) => {
                        let mut s = o[..m].to_vec();
                        s.sort_unstable();
                        s
                    }
                    None => o,
                }
            };
            if !visited.insert(key(&b0)) {
                continue;
            }
            starts += 1;
            let (mut cur, mut cur_v) = (b0, v0);
            for _ in 0..100 {
                let o = order(&cur);
                let (active, lambda): (Active, Vec<f64>) = match trimmed {
                    Some(m) => (o[..m].iter().map(|&i| (i, 1.0)).collect(), c.lambda()[..m].to_vec()),
                    None => {
                        let pinv = 1.0 / c.p();
                        let act: Active = o
                            .iter()
                            .zip(c.lambda())
                            .filter(|(_, l)| **l > 0.0)
                            .map(|(&i, l)| (i, l.powf(pinv)))
                            .collect();
                        let k = act.len();
                        (act, vec![1.0; k])
                    }
                };
                let Some((next, _)) = self.solve_subset(&active, &lambda, c.power())? else { break };
                let next_v = self.phi_with(c, &next);
                if !(next_v < cur_v - 1e-12 * cur_v.abs().max(1e-300)) {
                    break;
                }
                cur = next;
                cur_v = next_v;
                if !visited.insert(key(&cur)) {
                    break;
                }
            }
            if cur_v < best.0 {
                best = (cur_v, cur);
            }
        }
        Ok(Outcome { beta: best.1, tag: SolverTag::LocalSearch })
    }

    /// Candidate hyperplanes (centred coordinates) used to seed local search.
    pub fn starting_points(&self) -> Vec<Vec<f64>> {
        let pts: Vec<&[f64]> = self.data.points().iter().map(|p| p.coords()).collect();
        let n = pts.len();
        let d = self.data.dim();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(self.hints.seed);
        let mut out = Vec::new();

        // horizontal hyperplane at the 1-D optimum, and least squares
        let y = self.data.column(d - 1);
        if let Ok(o) = solve_omp(&y, self.criterion) {
            let mut b = vec![0.0; d + 1];
            b[0] = o.beta0;
            b[d] = -1.0;
            out.push(b);
        }
        let vertical = Slice::Vertical { dim: d };
        let all: Active = (0..n).map(|i| (i, 1.0)).collect();
        if let Some(z) = weighted_least_squares(&vertical.features(&self.data), &all) {
            out.push(vertical.beta(z[0], &z[1..]));
        }

        let corners: Vec<Vec<f64>> = {
            let mut cs: Vec<Vec<f64>> = Vec::new();
            for s in &self.slices {
                if let Slice::Face { corners, .. } = s {
                    for c in corners {
                        if !cs.iter().any(|x| x.iter().zip(c).all(|(a, b)| (a - b).abs() < 1e-12)) {
                            cs.push(c.clone());
                        }
                    }
                }
            }
            cs
        };

        if d == 2 {
            let line = |a: &[f64], b: &[f64], through: [f64; 2]| -> Option<Vec<f64>> {
                let normal = [-(b[1] - a[1]), b[0] - a[0]];
                if normal[0] == 0.0 && normal[1] == 0.0 {
                    return None;
                }
                Some(vec![-(normal[0] * through[0] + normal[1] * through[1]), normal[0], normal[1]])
            };
            let pair_cap = 40_000usize;
            let pairs: Vec<(usize, usize)> = {
                let all: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
                if all.len() <= pair_cap {
                    all
                } else {
                    sample(&mut rng, all.len(), pair_cap).into_iter().map(|k| all[k]).collect()
                }
            };
            for &(i, j) in &pairs {
                out.extend(line(pts[i], pts[j], [pts[i][0], pts[i][1]]));
            }
            // Chebyshev lines of point triples: parallel to (a, b), halfway to c
            let triple_cap = 400_000usize;
            let per_pair = (triple_cap / pairs.len().max(1)).clamp(1, n);
            for &(i, j) in &pairs {
                let thirds: Vec<usize> =
                    if per_pair >= n { (0..n).collect() } else { sample(&mut rng, n, per_pair).into_vec() };
                for k in thirds {
                    if k == i || k == j {
                        continue;
                    }
                    let mid = [(pts[i][0] + pts[k][0]) / 2.0, (pts[i][1] + pts[k][1]) / 2.0];
                    out.extend(line(pts[i], pts[j], mid));
                }
            }
            // polar-vertex directions through points and midpoints
            for c in &corners {
                for x in pts.iter().take(n) {
                    out.push(vec![-dot(c, x), c[0], c[1]]);
                }
                for &(i, j) in pairs.iter().take(pair_cap / corners.len().max(1)) {
                    let mid = [(pts[i][0] + pts[j][0]) / 2.0, (pts[i][1] + pts[j][1]) / 2.0];
                    out.push(vec![-dot(c, &mid), c[0], c[1]]);
                }
            }
        } else {
            let draws = binomial(n, d).min(3000) as usize;
            for _ in 0..draws {
                let idx = sample(&mut rng, n, d).into_vec();
                if let Some(b) = hyperplane_through(&idx.iter().map(|&i| pts[i]).collect::<Vec<_>>()) {
                    out.push(b);
                }
            }
            for c in &corners {
                for p in &pts {
                    let mut b = vec![-dot(c, p)];
                    b.extend_from_slice(c);
                    out.push(b);
                }
            }
        }
        if matches!(self.eval, Evaluator::Vertical) {
            out.retain(|b| b[d] != 0.0);
        }
        out
    }
}

/// Null vector of the `d × (d+1)` matrix with rows `(1, x_i)`.
fn hyperplane_through(points: &[&[f64]]) -> Option<Vec<f64>> {
    let d = points[0].len();
    let m = nalgebra::DMatrix::from_fn(d + 1, d + 1, |r, c| {
        if r < d {
            if c == 0 {
                1.0
            } else {
                points[r][c - 1]
            }
        } else {
            0.0
        }
    });
    let svd = m.svd(false, true);
    let vt = svd.v_t?;
    let (k, smallest) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1))?;
    let second =
        svd.singular_values.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, v)| *v).fold(f64::INFINITY, f64::min);
    if second <= 1e-10 * svd.singular_values.max() || !smallest.is_finite() {
        return None;
    }
    let b: Vec<f64> = vt.row(k).iter().copied().collect();
    (b[1..].iter().any(|x| x.abs() > 1e-14)).then_some(b)
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u128::MAX;
        }
    }
    acc
}

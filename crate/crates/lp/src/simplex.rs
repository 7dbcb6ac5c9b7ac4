//! Two-phase dense tableau simplex with Dantzig pricing, a Harris ratio test
//! and a Bland fallback against cycling.

use nalgebra::DMatrix;

use crate::model::{LinearProgram, Relation, Solution, SolveStatus};
use crate::LpError;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const ZERO_TOL: f64 = 1e-13;
const NOISE_TOL: f64 = 1e-7;
const FEAS_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const BLAND_AFTER: usize = 50;
const REINVERT_EVERY: usize = 50;

/// How an original variable maps onto nonnegative tableau columns.
#[derive(Debug, Clone, Copy)]
enum ColumnMap {
    Fixed(f64),
    /// `x = lower + col`
    Shifted {
        col: usize,
        lower: f64,
    },
    /// `x = upper - col`
    Negated {
        col: usize,
        upper: f64,
    },
    /// `x = pos - neg`
    Split {
        pos: usize,
        neg: usize,
    },
}

struct StandardForm {
    maps: Vec<ColumnMap>,
    num_cols: usize,
    rows: Vec<(Vec<f64>, Relation, f64)>,
    costs: Vec<f64>,
}

/// Solves `lp` with the default pivot budget of `50 * (rows + columns)`.
pub fn solve_lp(lp: &LinearProgram) -> Result<SolveStatus, LpError> {
    solve_lp_with_limit(lp, None)
}

pub fn solve_lp_with_limit(lp: &LinearProgram, max_pivots: Option<usize>) -> Result<SolveStatus, LpError> {
    lp.validate()?;
    let Some(form) = standard_form(lp) else {
        return Ok(SolveStatus::Infeasible);
    };
    let limit = max_pivots.unwrap_or(50 * (form.rows.len() + form.num_cols).max(1));
    let mut tab = Tableau::new(&form);
    let outcome = tab.run(&form.costs, limit);
    let finish = |tab: &Tableau| {
        let x = recover(lp, &form, &tab.structural_values(form.num_cols));
        Solution {
            objective: lp.objective_value(&x),
            bound: lp.objective_value(&x),
            x,
            iterations: tab.pivots,
            min_reduced_cost: tab.min_reduced_cost(),
        }
    };
    Ok(match outcome {
        Outcome::Optimal => SolveStatus::Optimal(finish(&tab)),
        Outcome::Infeasible => SolveStatus::Infeasible,
        Outcome::Unbounded => SolveStatus::Unbounded,
        Outcome::LimitPhase1 => SolveStatus::IterationLimit(None),
        Outcome::LimitPhase2 => {
            let mut s = finish(&tab);
            s.bound = f64::NEG_INFINITY;
            SolveStatus::IterationLimit(Some(s))
        }
    })
}

fn standard_form(lp: &LinearProgram) -> Option<StandardForm> {
    let mut maps = Vec::with_capacity(lp.num_vars());
    let mut num_cols = 0;
    let mut upper_rows = Vec::new();
    for &(lo, hi) in lp.bounds() {
        let map = if lo == hi {
            ColumnMap::Fixed(lo)
        } else if lo.is_finite() {
            if hi.is_finite() {
                upper_rows.push((num_cols, hi - lo));
            }
            num_cols += 1;
            ColumnMap::Shifted { col: num_cols - 1, lower: lo }
        } else if hi.is_finite() {
            num_cols += 1;
            ColumnMap::Negated { col: num_cols - 1, upper: hi }
        } else {
            num_cols += 2;
            ColumnMap::Split { pos: num_cols - 2, neg: num_cols - 1 }
        };
        maps.push(map);
    }

    let mut costs = vec![0.0; num_cols];
    for (map, &c) in maps.iter().zip(lp.objective()) {
        match *map {
            ColumnMap::Fixed(_) => {}
            ColumnMap::Shifted { col, .. } => costs[col] += c,
            ColumnMap::Negated { col, .. } => costs[col] -= c,
            ColumnMap::Split { pos, neg } => {
                costs[pos] += c;
                costs[neg] -= c;
            }
        }
    }

    let mut rows = Vec::with_capacity(lp.num_constraints() + upper_rows.len());
    for c in lp.constraints() {
        let mut row = vec![0.0; num_cols];
        let mut rhs = c.rhs;
        for (map, &a) in maps.iter().zip(&c.coeffs) {
            if a == 0.0 {
                continue;
            }
            match *map {
                ColumnMap::Fixed(v) => rhs -= a * v,
                ColumnMap::Shifted { col, lower } => {
                    row[col] += a;
                    rhs -= a * lower;
                }
                ColumnMap::Negated { col, upper } => {
                    row[col] -= a;
                    rhs -= a * upper;
                }
                ColumnMap::Split { pos, neg } => {
                    row[pos] += a;
                    row[neg] -= a;
                }
            }
        }
        let scale = c.coeffs.iter().fold(c.rhs.abs(), |m, a| m.max(a.abs())).max(1.0);
        if row.iter().all(|a| a.abs() <= ZERO_TOL * scale) {
            if !c.relation.holds(0.0, rhs, 1e-9 * scale) {
                return None;
            }
            continue;
        }
        rows.push((row, c.relation, rhs));
    }
    for (col, ub) in upper_rows {
        let mut row = vec![0.0; num_cols];
        row[col] = 1.0;
        rows.push((row, Relation::Le, ub));
    }
    // nonnegative right-hand sides; `a·x ≥ 0` becomes `−a·x ≤ 0`, whose
    // slack starts basic without an artificial
    for (row, rel, rhs) in &mut rows {
        if *rhs < 0.0 || (*rhs == 0.0 && *rel == Relation::Ge) {
            row.iter_mut().for_each(|a| *a = -*a);
            *rhs = -*rhs + 0.0;
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }
    Some(StandardForm { maps, num_cols, rows, costs })
}

fn recover(lp: &LinearProgram, form: &StandardForm, cols: &[f64]) -> Vec<f64> {
    form.maps
        .iter()
        .zip(lp.bounds())
        .map(|(map, &(lo, hi))| {
            let v = match *map {
                ColumnMap::Fixed(v) => v,
                ColumnMap::Shifted { col, lower } => lower + cols[col],
                ColumnMap::Negated { col, upper } => upper - cols[col],
                ColumnMap::Split { pos, neg } => cols[pos] - cols[neg],
            };
            v.clamp(lo, hi)
        })
        .collect()
}

enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
    LimitPhase1,
    LimitPhase2,
}

struct Tableau {
    /// `rows x (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    obj: Vec<f64>,
    width: usize,
    first_artificial: usize,
    pivots: usize,
    /// The initial tableau, for periodic reinversion.
    orig: Vec<Vec<f64>>,
    /// Costs of the current phase.
    costs: Vec<f64>,
    since_reinversion: usize,
}

impl Tableau {
    fn new(form: &StandardForm) -> Self {
        let m = form.rows.len();
        let n_slack = form.rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = form.rows.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = form.num_cols + n_slack;
        let width = first_artificial + n_art;
        let mut t = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut s, mut a) = (form.num_cols, first_artificial);
        for (coeffs, rel, rhs) in &form.rows {
            let mut row = vec![0.0; width + 1];
            row[..form.num_cols].copy_from_slice(coeffs);
            row[width] = *rhs;
            match rel {
                Relation::Le => {
                    row[s] = 1.0;
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    row[a] = 1.0;
                    basis.push(a);
                    s += 1;
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
            }
            t.push(row);
        }
        Self {
            orig: t.clone(),
            t,
            basis,
            obj: vec![0.0; width + 1],
            width,
            first_artificial,
            pivots: 0,
            costs: vec![0.0; width],
            since_reinversion: 0,
        }
    }

    fn run(&mut self, costs: &[f64], limit: usize) -> Outcome {
        if self.first_artificial < self.width {
            let mut phase1 = vec![0.0; self.width];
            phase1[self.first_artificial..].iter_mut().for_each(|c| *c = 1.0);
            self.price(&phase1);
            match self.iterate(self.width, limit, true) {
                Some(Outcome::Optimal) => {}
                _ => return Outcome::LimitPhase1,
            }
            let scale = self.t.iter().fold(1.0f64, |m, r| m.max(r[self.width].abs()));
            if -self.obj[self.width] > 1e-7 * scale {
                return Outcome::Infeasible;
            }
            self.drive_out_artificials();
        }
        let mut phase2 = vec![0.0; self.width];
        phase2[..costs.len()].copy_from_slice(costs);
        self.price(&phase2);
        match self.iterate(self.first_artificial, limit, false) {
            Some(o) => o,
            None => Outcome::LimitPhase2,
        }
    }

    /// Resets the objective row to reduced costs for `costs` under the
    /// current basis.
    fn price(&mut self, costs: &[f64]) {
        self.costs.copy_from_slice(costs);
        self.obj[..self.width].copy_from_slice(costs);
        self.obj[self.width] = 0.0;
        for (row, &b) in self.t.iter().zip(&self.basis) {
            let cb = costs[b];
            if cb != 0.0 {
                for (o, &v) in self.obj.iter_mut().zip(row) {
                    *o -= cb * v;
                }
            }
        }
    }

    /// Simplex iterations over columns `< allowed`: Dantzig pricing, switching
    /// to Bland's rule while pivots stay degenerate. `None` on budget
    /// exhaustion.
    fn iterate(&mut self, allowed: usize, limit: usize, phase1: bool) -> Option<Outcome> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate > BLAND_AFTER;
            let enter = if bland {
                (0..allowed).find(|&j| self.obj[j] < -COST_TOL)
            } else {
                (0..allowed).filter(|&j| self.obj[j] < -COST_TOL).min_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]))
            };
            let Some(enter) = enter else {
                // confirm on a freshly inverted tableau
                if self.since_reinversion > 0 && self.reinvert() {
                    continue;
                }
                return Some(Outcome::Optimal);
            };
            let Some((r, step)) = self.ratio_test(enter, bland) else {
                // A ray with a barely negative reduced cost is rounding
                // noise (phase 1 is bounded below by construction).
                if phase1 || self.obj[enter] > -NOISE_TOL {
                    self.obj[enter] = 0.0;
                    continue;
                }
                return Some(Outcome::Unbounded);
            };
            if self.pivots >= limit {
                return None;
            }
            degenerate = if step <= FEAS_TOL { degenerate + 1 } else { 0 };
            self.pivot(r, enter);
            if self.since_reinversion >= REINVERT_EVERY {
                self.reinvert();
            }
        }
    }

    /// Leaving row for column `enter` and the step length. Harris' two-pass
    /// test: find the largest step keeping every row within `FEAS_TOL` of
    /// feasibility, then take the largest pivot among rows blocking before
    /// it (lowest basic index under Bland's rule).
    fn ratio_test(&self, enter: usize, bland: bool) -> Option<(usize, f64)> {
        let rhs = self.width;
        let mut bound = f64::INFINITY;
        for row in &self.t {
            let a = row[enter];
            if a > PIVOT_TOL {
                bound = bound.min((row[rhs].max(0.0) + FEAS_TOL) / a);
            }
        }
        if !bound.is_finite() {
            return None;
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in self.t.iter().enumerate() {
            let a = row[enter];
            if a <= PIVOT_TOL || row[rhs].max(0.0) / a > bound {
                continue;
            }
            let better = match best {
                None => true,
                Some((k, _)) if bland => self.basis[i] < self.basis[k],
                Some((k, _)) => a > self.t[k][enter],
            };
            if better {
                best = Some((i, row[rhs].max(0.0) / a));
            }
        }
        best
    }

    /// Recomputes the tableau as `B⁻¹ [A | b]` from the initial rows to shed
    /// accumulated rounding error. Returns false (keeping the current
    /// tableau) if the basis matrix is numerically singular.
    fn reinvert(&mut self) -> bool {
        self.since_reinversion = 0;
        let m = self.t.len();
        let basis_matrix = DMatrix::from_fn(m, m, |i, k| self.orig[i][self.basis[k]]);
        let full = DMatrix::from_fn(m, self.width + 1, |i, j| self.orig[i][j]);
        let Some(solved) = basis_matrix.lu().solve(&full) else {
            return false;
        };
        if solved.iter().any(|v| !v.is_finite()) {
            return false;
        }
        for (i, row) in self.t.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let x = solved[(i, j)];
                *v = if x.abs() < ZERO_TOL { 0.0 } else { x };
            }
        }
        for (i, &b) in self.basis.iter().enumerate() {
            for (k, row) in self.t.iter_mut().enumerate() {
                row[b] = if k == i { 1.0 } else { 0.0 };
            }
        }
        let costs = std::mem::take(&mut self.costs);
        self.costs = vec![0.0; self.width];
        self.price(&costs);
        true
    }

    fn pivot(&mut self, r: usize, c: usize) {
        self.pivots += 1;
        self.since_reinversion += 1;
        let p = self.t[r][c];
        for v in &mut self.t[r] {
            *v /= p;
        }
        self.t[r][c] = 1.0;
        let pivot_row = std::mem::take(&mut self.t[r]);
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            eliminate(row, &pivot_row, c);
        }
        eliminate(&mut self.obj, &pivot_row, c);
        self.t[r] = pivot_row;
        self.basis[r] = c;
    }

    /// Pivots zero-level artificials out of the basis after phase 1, where a
    /// structural or slack column allows it.
    fn drive_out_artificials(&mut self) {
        let mut r = 0;
        while r < self.t.len() {
            if self.basis[r] < self.first_artificial {
                r += 1;
                continue;
            }
            let best = (0..self.first_artificial)
                .map(|j| (j, self.t[r][j].abs()))
                .filter(|&(_, a)| a > PIVOT_TOL)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            match best {
                Some((j, _)) => {
                    self.pivot(r, j);
                    r += 1;
                }
                // redundant row: its artificial stays basic at zero and can
                // never be chosen to leave, since the row is empty
                None => r += 1,
            }
        }
    }

    fn structural_values(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (row, &b) in self.t.iter().zip(&self.basis) {
            if b < n {
                x[b] = row[self.width].max(0.0);
            }
        }
        x
    }

    fn min_reduced_cost(&self) -> f64 {
        self.obj[..self.first_artificial].iter().copied().fold(0.0, f64::min)
    }
}

fn eliminate(row: &mut [f64], pivot_row: &[f64], c: usize) {
    let f = row[c];
    if f == 0.0 {
        return;
    }
    for (v, &p) in row.iter_mut().zip(pivot_row) {
        if p != 0.0 {
            *v -= f * p;
            if v.abs() < ZERO_TOL {
                *v = 0.0;
            }
        }
    }
    row[c] = 0.0;
}

use std::collections::BTreeSet;

use crate::LpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }

    /// Whether `lhs (rel) rhs` holds up to `tol`.
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Relation::Le => lhs <= rhs + tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
            Relation::Ge => lhs >= rhs - tol,
        }
    }
}

/// A dense row `coeffs · x (relation) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `minimize c·x` subject to dense linear rows and per-variable bounds.
///
/// Variables default to `[0, +inf)`. Columns may be added after rows; existing
/// rows are padded with zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    bounds: Vec<(f64, f64)>,
    names: Vec<String>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// A program with `n` nonnegative variables named `x1..xn` and zero cost.
    pub fn with_vars(n: usize) -> Self {
        let mut lp = Self::new();
        for j in 0..n {
            lp.add_var(&format!("x{}", j + 1), 0.0, f64::INFINITY, 0.0);
        }
        lp
    }

    /// Adds a column and returns its index. Names are not checked here; see
    /// [`LinearProgram::validate`].
    pub fn add_var(&mut self, name: &str, lower: f64, upper: f64, cost: f64) -> usize {
        self.objective.push(cost);
        self.bounds.push((lower, upper));
        self.names.push(name.to_string());
        for c in &mut self.constraints {
            c.coeffs.push(0.0);
        }
        self.objective.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn set_cost(&mut self, var: usize, cost: f64) {
        self.objective[var] = cost;
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.bounds[var] = (lower, upper);
    }

    /// Adds a dense row; `coeffs` must have one entry per variable.
    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Result<usize, LpError> {
        if coeffs.len() != self.num_vars() {
            return Err(LpError::Malformed(format!(
                "row has {} coefficients, expected {}",
                coeffs.len(),
                self.num_vars()
            )));
        }
        let name = format!("c{}", self.constraints.len() + 1);
        self.constraints.push(Constraint { name, coeffs, relation, rhs });
        Ok(self.constraints.len() - 1)
    }

    /// Adds a row given as `(variable, coefficient)` pairs; repeated
    /// variables are summed.
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], relation: Relation, rhs: f64) -> Result<usize, LpError> {
        let mut coeffs = vec![0.0; self.num_vars()];
        for &(j, a) in terms {
            let slot =
                coeffs.get_mut(j).ok_or_else(|| LpError::Malformed(format!("variable index {j} out of range")))?;
            *slot += a;
        }
        self.add_constraint(coeffs, relation, rhs)
    }

    pub fn set_constraint_name(&mut self, row: usize, name: &str) {
        self.constraints[row].name = name.to_string();
    }

    /// Checks finiteness, bound ordering, row widths and identifier syntax.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::Malformed("non-finite objective coefficient".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::Malformed(format!("invalid bounds on {}", self.names[j])));
            }
            if lo > hi {
                return Err(LpError::Malformed(format!("lower bound exceeds upper bound on {}", self.names[j])));
            }
        }
        for c in &self.constraints {
            if c.coeffs.len() != n {
                return Err(LpError::Malformed(format!("row {} has wrong width", c.name)));
            }
            if c.coeffs.iter().any(|a| !a.is_finite()) || !c.rhs.is_finite() {
                return Err(LpError::Malformed(format!("non-finite data in row {}", c.name)));
            }
        }
        let mut seen = BTreeSet::new();
        for name in self.names.iter().chain(self.constraints.iter().map(|c| &c.name)) {
            if !is_identifier(name) {
                return Err(LpError::Malformed(format!("invalid identifier {name:?}")));
            }
        }
        for name in &self.names {
            if !seen.insert(name.as_str()) {
                return Err(LpError::Malformed(format!("duplicate variable name {name}")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            let lhs = dot(&c.coeffs, x);
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (&(lo, hi), &xj) in self.bounds.iter().zip(x) {
            worst = worst.max(lo - xj).max(xj - hi);
        }
        worst
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '[' | ']'))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A linear program in which some variables must take values in `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MixedIntegerProgram {
    lp: LinearProgram,
    binaries: BTreeSet<usize>,
}

impl MixedIntegerProgram {
    /// Marks `binaries` as 0/1 variables; their bounds are clipped to `[0, 1]`.
    pub fn new(mut lp: LinearProgram, binaries: impl IntoIterator<Item = usize>) -> Result<Self, LpError> {
        let binaries: BTreeSet<usize> = binaries.into_iter().collect();
        for &j in &binaries {
            let Some(&(lo, hi)) = lp.bounds.get(j) else {
                return Err(LpError::Malformed(format!("binary index {j} out of range")));
            };
            let (lo, hi) = (lo.max(0.0), hi.min(1.0));
            if lo > hi {
                return Err(LpError::Malformed(format!("binary {} has empty domain", lp.names[j])));
            }
            lp.bounds[j] = (lo, hi);
        }
        Ok(Self { lp, binaries })
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn binaries(&self) -> impl Iterator<Item = usize> + '_ {
        self.binaries.iter().copied()
    }

    pub fn is_binary(&self, j: usize) -> bool {
        self.binaries.contains(&j)
    }
}

impl From<LinearProgram> for MixedIntegerProgram {
    fn from(lp: LinearProgram) -> Self {
        Self { lp, binaries: BTreeSet::new() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Best proven lower bound. Equals `objective` for a plain LP.
    pub bound: f64,
    /// Simplex pivots (LP) or branch-and-bound nodes (MILP).
    pub iterations: usize,
    /// Smallest phase-2 reduced cost at termination (LP only; `0` for MILP).
    pub min_reduced_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveStatus {
    Optimal(Solution),
    Infeasible,
    Unbounded,
    /// The pivot or node budget ran out; carries the best feasible point
    /// found, if any.
    IterationLimit(Option<Solution>),
}

impl SolveStatus {
    pub fn optimal(&self) -> Option<&Solution> {
        match self {
            SolveStatus::Optimal(s) => Some(s),
            _ => None,
        }
    }

    pub fn into_optimal(self) -> Option<Solution> {
        match self {
            SolveStatus::Optimal(s) => Some(s),
            _ => None,
        }
    }
}

//! Best-first branch and bound over binary variables.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::{MixedIntegerProgram, Solution, SolveStatus};
use crate::simplex::solve_lp_with_limit;
use crate::LpError;

#[derive(Debug, Clone, PartialEq)]
pub struct MilpOptions {
    /// Relative optimality gap at which the search stops.
    pub gap_tol: f64,
    /// Maximum number of LP relaxations solved.
    pub node_limit: usize,
    /// Values within this distance of 0 or 1 count as integral.
    pub integrality_tol: f64,
    /// Only solutions strictly better than this are of interest: nodes whose
    /// bound reaches it are pruned. A completed search that finds none
    /// reports `Infeasible`.
    pub cutoff: Option<f64>,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self { gap_tol: 1e-6, node_limit: 100_000, integrality_tol: 1e-6, cutoff: None }
    }
}

struct Node {
    bound: f64,
    seq: u64,
    fixes: Vec<(usize, f64)>,
    x: Vec<f64>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: invert so the smallest bound, then the
    // oldest node, comes out first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

enum Relaxation {
    Solved(Solution),
    Infeasible,
    Unbounded,
}

/// Minimizes a mixed 0/1 program. Branches on the most fractional binary
/// (lowest index on ties), exploring the down branch first.
pub fn solve_milp(mip: &MixedIntegerProgram, opts: &MilpOptions) -> Result<SolveStatus, LpError> {
    mip.lp().validate()?;
    let binaries: Vec<usize> = mip.binaries().collect();
    let nodes_solved = Cell::new(0usize);
    let solve_node = |fixes: &[(usize, f64)]| -> Result<Relaxation, LpError> {
        nodes_solved.set(nodes_solved.get() + 1);
        let mut lp = mip.lp().clone();
        for &(j, v) in fixes {
            lp.set_bounds(j, v, v);
        }
        Ok(match solve_lp_with_limit(&lp, None)? {
            SolveStatus::Optimal(s) => Relaxation::Solved(s),
            SolveStatus::Infeasible => Relaxation::Infeasible,
            SolveStatus::Unbounded => Relaxation::Unbounded,
            SolveStatus::IterationLimit(_) => {
                return Err(LpError::Malformed("LP relaxation hit its pivot limit".into()))
            }
        })
    };

    let root = match solve_node(&[])? {
        Relaxation::Solved(s) => s,
        Relaxation::Infeasible => return Ok(SolveStatus::Infeasible),
        Relaxation::Unbounded => return Ok(SolveStatus::Unbounded),
    };

    let mut incumbent: Option<Solution> = None;
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let cutoff = opts.cutoff.unwrap_or(f64::INFINITY);
    let upper = |incumbent: &Option<Solution>| incumbent.as_ref().map_or(cutoff, |inc| inc.objective.min(cutoff));
    let gap = |upper: f64| opts.gap_tol * upper.abs().max(1.0);
    let mut consider =
        |s: Solution, fixes: Vec<(usize, f64)>, heap: &mut BinaryHeap<Node>, incumbent: &mut Option<Solution>| {
            let ub = upper(incumbent);
            if ub.is_finite() && s.objective >= ub - gap(ub) {
                return;
            }
            match branching_var(&s.x, &binaries, opts.integrality_tol) {
                None => {
                    if incumbent.as_ref().is_none_or(|inc| s.objective < inc.objective) {
                        let mut s = s;
                        for &j in &binaries {
                            s.x[j] = s.x[j].round();
                        }
                        *incumbent = Some(s);
                    }
                }
                Some(_) => {
                    seq += 1;
                    heap.push(Node { bound: s.objective, seq, fixes, x: s.x });
                }
            }
        };
    consider(root, Vec::new(), &mut heap, &mut incumbent);

    let mut best_bound = f64::NEG_INFINITY;
    while let Some(node) = heap.pop() {
        best_bound = node.bound;
        let ub = upper(&incumbent);
        if ub.is_finite() && ub - node.bound <= gap(ub) {
            break;
        }
        if nodes_solved.get() >= opts.node_limit {
            return Ok(SolveStatus::IterationLimit(incumbent.map(|mut s| {
                s.bound = best_bound;
                s.iterations = nodes_solved.get();
                s.min_reduced_cost = 0.0;
                s
            })));
        }
        let j = branching_var(&node.x, &binaries, opts.integrality_tol).expect("queued nodes are fractional");
        for v in [0.0, 1.0] {
            let mut fixes = node.fixes.clone();
            fixes.push((j, v));
            match solve_node(&fixes)? {
                Relaxation::Solved(s) => consider(s, fixes, &mut heap, &mut incumbent),
                Relaxation::Infeasible => {}
                Relaxation::Unbounded => return Ok(SolveStatus::Unbounded),
            }
        }
        best_bound = f64::NEG_INFINITY;
    }

    Ok(match incumbent {
        Some(mut s) => {
            s.bound = if best_bound.is_finite() { best_bound.min(s.objective) } else { s.objective };
            s.iterations = nodes_solved.get();
            s.min_reduced_cost = 0.0;
            SolveStatus::Optimal(s)
        }
        None => SolveStatus::Infeasible,
    })
}

fn branching_var(x: &[f64], binaries: &[usize], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in binaries {
        let frac = (x[j] - x[j].round()).abs();
        if frac > tol && best.is_none_or(|(_, f)| frac > f) {
            best = Some((j, frac));
        }
    }
    best.map(|(j, _)| j)
}

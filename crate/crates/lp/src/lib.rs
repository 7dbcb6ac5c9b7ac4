//! Small dense linear and mixed-integer programming.
//!
//! The simplex is a textbook two-phase tableau method with Bland's rule, so
//! it is slow but deterministic and cycle-free. It is meant for models with
//! at most a few hundred rows and columns.

// `!(x > 0.0)` style tests are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;
mod lpfile;
mod milp;
mod model;
mod simplex;

pub use error::LpError;
pub use lpfile::{export_lp_file, parse_lp, to_lp_string};
pub use milp::{solve_milp, MilpOptions};
pub use model::{Constraint, LinearProgram, MixedIntegerProgram, Relation, Solution, SolveStatus};
pub use simplex::{solve_lp, solve_lp_with_limit};

//! Integer programs for the committee search problems, plus the backends
//! that solve them.

mod bnb;
mod build;
mod fpt;
mod lp;
mod model;
mod solve;

pub use build::{build_diff_committees, build_jr_not_ejrp, build_p_candidates, build_quotient_variant, QuotientProblem};
pub use fpt::{diff_committees_fpt_jr, FptDiff};
pub use lp::{parse_lp, write_lp};
pub use model::{Comparator, Constraint, Decoded, MilpModel, ProblemKind, Sense, VarId, VarKind, Variable};
pub use solve::{parse_solution, solve, Backend, ExternalSolution, ExternalStatus, SolveOutcome, SolveStatus, SOLVER_CMD_ENV};

//! Linear programs for sparse generalized inverses and the simplex solver
//! that handles them.

mod problem;
mod simplex;

pub use problem::{
    build_left_inverse_lps, build_relaxed_mp_lp, build_right_inverse_lps, LinearRow, LpProblem,
    PropertySet, VarKind, VarMap,
};
pub use simplex::{
    solve_lp, solve_lp_with, LpSolution, LpStatus, PivotRule, PivotStep, SolveOptions,
};

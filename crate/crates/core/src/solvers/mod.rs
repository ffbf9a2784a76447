//! Deterministic numerical cores: linear programming, least squares,
//! p-norm minimisation, and the discrete best-approximation fits built on them.

pub mod fit;
pub mod lp;
pub mod lstsq;
pub mod pnorm;
pub mod qp;

pub use fit::{chebyshev_fit, l1_fit, Fit};
pub use lp::{
    solve_lp, solve_lp_with, Constraint, LinearProgram, LpOptions, LpStatus, Relation, Sense,
    SolveReport,
};
pub use lstsq::least_squares;
pub use pnorm::{minimize_pnorm, PnormSolution, PNORM_MAX_ITER, PNORM_REL_TOL};
pub use qp::min_norm_in_polytope;

//! Factorizations of constraint Jacobians, cotangent projection and the
//! position-constraint solvers.

mod banded;
mod bordered;
mod dense;
mod factor;
mod solve;
mod sparse;

pub use banded::{BandedLu, BandedMatrix};
pub use bordered::{bordered_lq_factorize, BorderedFactors, BorderedSparseJacobian};
pub use dense::{lq_factorize, tangent_basis, LqFactors};
pub use factor::{project_momentum, ConstraintFactors, Factorization};
pub use solve::{
    gauss_newton_solve, gauss_newton_solve_weighted, solve_position_constraints, GaussNewtonOptions, SolveOptions, SolveOutcome,
};
pub use sparse::CsrMatrix;

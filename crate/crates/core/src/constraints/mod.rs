//! Constraint systems for fixed points, Hopf points and periodic orbits, with
//! candidate selection, continuation and limit-cycle initialization.

mod candidates;
mod fixed_point;
mod limit_cycle;
mod palc;
mod periodic;

pub use candidates::{
    eigenvector, imaginary_pair_distance, leading_oscillatory_mode, select_hopf_candidates, HopfCandidate,
};
pub use fixed_point::{build_fixed_point, build_hopf, FixedPointConstraint, HopfConstraint, HopfParts};
pub use limit_cycle::{estimate_period, initialize_limit_cycle, LimitCycleOptions, LimitCycleStart};
pub use palc::{branch_tangent, palc_trace, PalcBranch, PalcOptions};
pub use periodic::{build_periodic, CollocationMesh, PeriodicOrbitConstraint, GAUSS2};

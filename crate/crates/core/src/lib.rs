//! Constrained Langevin sampling of ODE model parameters.
//!
//! Samplers move on manifolds defined by equality constraints on a joint
//! vector of dynamical variables and parameters: fixed points, Hopf
//! bifurcation points and collocation-discretized periodic orbits. An
//! affine-invariant ensemble sampler over forward-integrated likelihoods is
//! included as a baseline, together with ESS, R̂, KL and curvature-weight
//! diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod base;
pub mod constraints;
pub mod diagnostics;
pub mod error;
pub mod inference;
pub mod linalg;
pub mod models;
pub mod ode;
pub mod pipeline;
pub mod samplers;

pub use base::*;
pub use error::{Error, LinalgError, OdeError, Result};

//! Domain types shared by every module: variable layouts, phase points, the
//! mass matrix, the model/constraint/potential interfaces and RNG streams.

mod check;
mod layout;
mod model;
mod rng;

pub use check::{check_gradient, check_jacobian, check_jacobian_fn};
pub use layout::{MassSpec, PhasePoint, VariableLayout};
pub use model::{
    ConstraintJacobian, ConstraintSystem, FlatPotential, ModelOde, PotentialModel, StructureTag,
};
pub use rng::RngStream;

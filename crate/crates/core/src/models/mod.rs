//! ODE models: the cyclic repressilator and small reference systems.

mod data;
mod repressilator;
mod simple;

pub use data::{
    bundled_dataset, bundled_parameters, generate_data, SimulatedDataset, BUNDLED_K0, BUNDLED_K1, BUNDLED_N, BUNDLED_SEED, BUNDLED_Y0,
    DEFAULT_NOISE_VAR, DEFAULT_POINTS, DEFAULT_T_TOTAL,
};
pub use repressilator::{logistic, softplus, Repressilator};
pub use simple::{HarmonicOscillator, PinnedModel, StuartLandau};

//! Constrained Langevin dynamics (OBABO splitting, optionally
//! Metropolis-adjusted), random-walk Metropolis and the affine-invariant
//! ensemble sampler.

mod chain;
mod ensemble;
mod langevin;
mod rwm;

pub use chain::{
    cause_breakdown, run_chain, samples_from_csv, samples_to_csv, AcceptanceStats, ChainOptions, ChainRecord,
    ChainSummary, FEASIBILITY_TOL,
};
pub use ensemble::{
    run_ensemble, sample_stretch, stretch_move, stretch_move_sweep, EnsembleConfig, EnsembleRecord,
};
pub use langevin::{
    constrained_momentum_noise, constrained_momentum_step, constrained_position_step, draw_momentum, obabo_step,
    ChainState, LangevinConfig, OuCoefficients, PositionStep, RejectCause, SolveSettings, StepOutcome,
};
pub use rwm::{rwm_step, run_rwm, RwmRecord};

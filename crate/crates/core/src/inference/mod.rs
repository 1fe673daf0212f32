//! Box restraints, the arc-length penalty, data preprocessing, likelihoods
//! and the posteriors sampled in each mode.

mod likelihood;
mod posterior;
mod preprocess;
mod prior;

pub use likelihood::{log_likelihood_periodic, DataLikelihood, DEFAULT_SIGMA, DEFAULT_SIGMA_TAU};
pub use posterior::{log_prior, ConstrainedPosterior, EnsemblePosterior};
pub use preprocess::{
    dataset_checksum, dominant_mode, preprocess_constrained, preprocess_ensemble, Template, TrigInterpolant,
};
pub use prior::{default_block_bounds, ArcLengthPenalty, BoxRestraint, BOX_COEFFICIENT, DEFAULT_ARC_THRESHOLD};

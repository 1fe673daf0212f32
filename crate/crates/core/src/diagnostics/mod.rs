//! Effective sample size, multivariate R̂, KL divergence estimation and
//! curvature weights for projected manifold samples.

mod curvature;
mod ess;
mod kl;
mod report;
mod rhat;

pub use curvature::curvature_weights;
pub use ess::{autocorrelation, ess, integrated_autocorrelation_time, MIN_SERIES_LEN};
pub use kl::{kl_estimate, kl_from_log_densities, GaussianKde, KlEstimate};
pub use report::{build_report, DiagnosticsReport, ParameterEss};
pub use rhat::{chain_covariances, gelman_rubin};

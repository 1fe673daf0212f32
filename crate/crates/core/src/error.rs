use thiserror::Error;

/// Failures from the linear-algebra layer: factorizations and constraint solves.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("constraint Jacobian is rank deficient at row {row}")]
    RankDeficient { row: usize },
    #[error("constraint solve did not converge after {iters} iterations (residual {residual:e})")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("constraint residual diverged from {initial:e} to {current:e}")]
    ResidualDiverged { initial: f64, current: f64 },
    #[error("non-finite constraint residual")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Failures from the time integrators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size fell below the minimum at t = {t}")]
    MinStepReached { t: f64 },
    #[error("simplified Newton iteration for the Radau stages failed at t = {t}")]
    NewtonStageFailure { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid integration request: {0}")]
    Invalid(String),
}

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("unknown variable block `{0}`")]
    UnknownBlock(String),
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Ode(#[from] OdeError),
    #[error("non-finite value while checking derivatives at coordinate {0}")]
    NonFiniteDerivative(usize),
    #[error("no complex eigenvalue pair among fixed-point candidates")]
    NoComplexPair,
    #[error("no dominant nonzero Fourier mode in the data")]
    NoDominantMode,
    #[error("degenerate series: zero variance")]
    DegenerateSeries,
    #[error("within-chain covariance is singular")]
    SingularWithinChainCovariance,
    #[error("unnormalized density p1 vanishes at sample {0}")]
    ZeroDensity(usize),
    #[error("starting point is infeasible: residual {0:e}")]
    InfeasibleStart(f64),
    #[error("no viable candidate: {0}")]
    NoViableCandidate(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use std::fmt;

use clangevin::Error;

/// Failure classes, mapped onto the process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration, missing or malformed input files: exit 2.
    Config(String),
    /// Solver, integrator or sampler failure: exit 3.
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Parse(_)
            | Error::Io(_)
            | Error::UnknownBlock(_)
            | Error::InvalidLayout(_)
            | Error::InfeasibleStart(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

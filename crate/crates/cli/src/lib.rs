//! Library surface of the command-line front end, exposed so the
//! integration and acceptance suites can drive the pipeline in-process.

pub mod commands;
pub mod config;
pub mod report;

use ifolio::Error;

/// Errors surfaced to the user, mapped onto the stable exit-code contract:
/// 0 success, 1 failed acceptance checks, 2 configuration, 3 model,
/// 4 degenerate criterion, 5 solver, 6 resource limits.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Core(Error),
    ChecksFailed(usize),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::ChecksFailed(n) => write!(f, "{n} acceptance check(s) failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ChecksFailed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Core(e) => match e {
                Error::InvalidConfig(_)
                | Error::BadShape(_)
                | Error::IfConditionViolated { .. } => 2,
                Error::EmptySeries(_)
                | Error::NonFiniteInput(_)
                | Error::DimensionMismatch { .. }
                | Error::DegenerateAsset { .. }
                | Error::Parse { .. }
                | Error::InvariantViolation(_)
                | Error::ZeroVariance(_)
                | Error::InvalidWeights(_)
                | Error::Io(_) => 3,
                Error::DegenerateCriterion { .. } => 4,
                Error::SolverFailure { .. } => 5,
                Error::ResourceLimit { .. } => 6,
            },
        }
    }
}

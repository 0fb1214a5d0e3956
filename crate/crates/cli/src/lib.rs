//! Command-line experiment runner for `mfpinn`.

pub mod commands;
pub mod config;
pub mod experiment;

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Diverged(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Solver(mfpinn::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Diverged(_) => 3,
            CliError::Io(_) | CliError::Solver(_) => 1,
        }
    }
}

impl From<mfpinn::Error> for CliError {
    fn from(e: mfpinn::Error) -> Self {
        match e {
            mfpinn::Error::Config(m) => CliError::Config(m),
            e @ mfpinn::Error::Diverged { .. } => CliError::Diverged(e.to_string()),
            e => CliError::Solver(e),
        }
    }
}

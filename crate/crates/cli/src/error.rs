use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] hyperfit_core::Error),
    /// The solver stopped without proving optimality.
    #[error("no optimality certificate ({0})")]
    NotOptimal(&'static str),
    #[error("verification failed: {0}")]
    Verify(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }

    /// 0 success, 1 non-optimal or failed verification, 2 input error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::NotOptimal(_) | CliError::Verify(_) | CliError::Core(hyperfit_core::Error::Solver(_)) => 1,
            CliError::Input(_) | CliError::Core(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Core(hyperfit_core::Error::Solver(_)) => "solver",
            CliError::Core(_) => "invalid",
            CliError::NotOptimal(_) => "not-optimal",
            CliError::Verify(_) => "verify",
        }
    }
}

//! Scenario files, grid evaluation and export for the `dlw` binary.

pub mod export;
pub mod scenario;
pub mod sweep;

use std::process::ExitCode;

use thiserror::Error;

/// Everything that ends a command early. Maps onto the process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, expression, argument or unwritable path.
    #[error("{0}")]
    Input(String),
    /// The checks ran and did not pass.
    #[error("{0}")]
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Input(_) => ExitCode::from(2),
            CliError::Verification(_) => ExitCode::from(1),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

use slosh_core::SloshError;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad flags, config or domain spec. Nothing has been written.
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Solver(#[from] SloshError),
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
    #[error("output schema violation: {0}")]
    Schema(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Invalid(_) => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}

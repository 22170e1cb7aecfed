use std::process::ExitCode;

use thiserror::Error;

/// Command failures, each tied to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// An inequality or verification check failed, or a pipeline stage gave up.
    #[error("{0}")]
    Failed(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(self.code())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn stage(stage: &str, e: impl std::fmt::Display) -> Self {
        CliError::Failed(format!("stage {stage}: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;

use std::process::ExitCode;

/// Failure of a command, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration or network document (exit 2).
    #[error("config error: {0}")]
    Config(String),
    /// Request too large to run (exit 3).
    #[error("refused: {0}")]
    Resource(String),
    /// Simulation error on otherwise valid input (exit 1).
    #[error("simulation error: {0}")]
    Sim(#[from] atomcluster_core::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Resource(_) => 3,
            CliError::Sim(_) | CliError::Io(_) => 1,
        }
    }

    pub fn to_exit(&self) -> ExitCode {
        ExitCode::from(self.exit_code())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub(crate) fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

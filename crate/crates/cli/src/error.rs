//! CLI error type with process exit-code mapping.

use hotgrid_core::Error as CoreError;

/// Pipeline errors, tagged by the failure class that decides the exit
/// code: 1 config, 2 data, 3 numeric.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric error: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    /// Tags a core error with the pipeline stage it surfaced in.
    pub fn from_core(stage: &str, err: CoreError) -> Self {
        let msg = format!("[{stage}] {err}");
        match err {
            CoreError::NonFinite(_) => CliError::Numeric(msg),
            _ => CliError::Data(msg),
        }
    }

    pub fn config(stage: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Config(format!("[{stage}] {msg}"))
    }

    pub fn data(stage: &str, msg: impl std::fmt::Display) -> Self {
        CliError::Data(format!("[{stage}] {msg}"))
    }

    pub fn io(stage: &str, path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Data(format!("[{stage}] {}: {err}", path.display()))
    }
}

pub type CliResult<T> = Result<T, CliError>;

//! CLI error wrapper with stable codes and the exit-code mapping.
//!
//! Exit codes: 0 success, 2 validation (bad inputs, bad config), 3 numerical
//! failure, 4 I/O failure.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] ivsens::Error),

    #[error("config: {0}")]
    Config(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error("io: {0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Config(_) => "config",
            CliError::Parse(_) => "parse",
            CliError::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => {
                if e.is_input_error() {
                    2
                } else {
                    3
                }
            }
            CliError::Config(_) | CliError::Parse(_) => 2,
            CliError::Io(_) => 4,
        }
    }
}

pub fn io_err(context: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{context}: {err}"))
}

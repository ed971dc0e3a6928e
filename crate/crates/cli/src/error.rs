use std::io;

use rpm3_core::Error as CoreError;

/// Failures of a command, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("decoding failed: {0}")]
    Decode(String),

    #[error("privacy violation: {0}")]
    Privacy(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Decode(_) => 3,
            CliError::Privacy(_) => 4,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::FieldMismatch { .. }
            | CoreError::NotPrime(_)
            | CoreError::InvalidEvaluationSet(_)
            | CoreError::InvalidArgument(_)
            | CoreError::ShapeMismatch(_)
            | CoreError::Infeasible(_)
            | CoreError::TooLarge(_) => CliError::Config(e.to_string()),
            _ => CliError::Decode(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            CliError::Io(e.into())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

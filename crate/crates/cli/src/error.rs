use std::path::PathBuf;

use thiserror::Error;

/// Pipeline failures, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration or input:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),
    #[error("missing artifact {}: run `stackdetect {stage}` first", path.display())]
    Missing { stage: &'static str, path: PathBuf },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Validation(vec![message.into()])
    }

    /// 1 validation, 2 missing artifact, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Missing { .. } => 2,
            CliError::Internal(_) => 3,
        }
    }
}

impl From<stackdetect_core::Error> for CliError {
    fn from(e: stackdetect_core::Error) -> Self {
        use stackdetect_core::Error as E;
        match e {
            E::Io(_) | E::Json(_) => CliError::Internal(e.to_string()),
            other => CliError::invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

use std::path::PathBuf;

use mcvd_core::Error as CoreError;

/// Failures of the command-line layer, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write {}: {source}", path.display())]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{field}: missing or unsupported unit, expected `{expected}`")]
    Unit {
        field: String,
        expected: &'static str,
    },
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numerical(String),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::Usage(_) | AppError::Write { .. } => 1,
            AppError::Read { .. }
            | AppError::Parse { .. }
            | AppError::Unit { .. }
            | AppError::Validation(_) => 2,
            AppError::Numerical(_) => 3,
        }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::MisorderedMeans { .. }
            | CoreError::NonFiniteObjective
            | CoreError::GridTooLarge { .. } => AppError::Numerical(e.to_string()),
            _ => AppError::Validation(e.to_string()),
        }
    }
}

pub type AppResult<T> = std::result::Result<T, AppError>;

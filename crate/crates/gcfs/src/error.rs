use std::path::Path;

use thiserror::Error;

/// Errors of the host tools, grouped by CLI exit code.
#[derive(Debug, Error)]
pub enum AppError {
    /// Bad or missing arguments (exit 1).
    #[error("{0}")]
    Usage(String),
    /// File system or audio format problems (exit 2).
    #[error("{0}")]
    Io(String),
    /// Invalid configuration, scene or weights (exit 3).
    #[error("{0}")]
    Config(String),
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Io(_) => 2,
            AppError::Config(_) => 3,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        AppError::Io(format!("{}: {err}", path.display()))
    }
}

impl From<gcfs_core::Error> for AppError {
    fn from(e: gcfs_core::Error) -> Self {
        AppError::Config(e.to_string())
    }
}

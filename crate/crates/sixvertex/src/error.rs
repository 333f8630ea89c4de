use std::path::PathBuf;

use thiserror::Error;

/// Exit status for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit status for bad input: domain, validation, configuration or IO problems.
pub const EXIT_INPUT: i32 = 2;
/// Exit status for a numerical solver failure.
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] sixvertex_core::Error),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config {}: {msg}", path.display())]
    Config { path: PathBuf, msg: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("surface file {}: {msg}", path.display())]
    SurfaceFormat { path: PathBuf, msg: String },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}

pub type AppResult<T> = Result<T, AppError>;

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(e) if !e.is_input_error() => EXIT_SOLVER,
            _ => EXIT_INPUT,
        }
    }
}

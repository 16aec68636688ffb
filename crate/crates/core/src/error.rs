use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite value detected at t = {t}")]
    Unstable { t: f64 },

    #[error("negativity beyond tolerance at t = {t}: min = {min:e} at index {index}")]
    SchemeFailure { t: f64, min: f64, index: usize },

    #[error("threshold {threshold} is never attained")]
    NoFront { threshold: f64 },

    #[error("insufficient samples: need {needed}, have {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("insufficient history: {0}")]
    InsufficientHistory(String),

    #[error("initial data violates envelope precondition at x = {location:?} (excess {excess:e})")]
    Precondition { location: Vec<f64>, excess: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("snapshot {path}: {message}")]
    Snapshot { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of the time integration itself.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Unstable { .. } | Error::SchemeFailure { .. })
    }
}

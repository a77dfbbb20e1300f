use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LrdError>;

#[derive(Debug, Error)]
pub enum LrdError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("non-positive price {value} at line {line}")]
    NonPositivePrice { line: usize, value: f64 },

    #[error("duplicate date {date}")]
    DuplicateDate { date: chrono::NaiveDate },

    #[error("series too short: need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("zero variance: all values are equal")]
    ZeroVariance,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model parameters: {0}")]
    InvalidParameters(String),

    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite entry at row {row}, column {column}")]
    NonFiniteEntry { row: usize, column: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl LrdError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LrdError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by the data or arguments rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            LrdError::Numerical(_) | LrdError::NonFiniteState { .. }
        )
    }
}

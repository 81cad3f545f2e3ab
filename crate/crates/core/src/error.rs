use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid matrix shape {rows}x{cols} with {len} entries")]
    InvalidShape { rows: usize, cols: usize, len: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("{routine} did not converge within {sweeps} sweeps")]
    NoConvergence { routine: &'static str, sweeps: usize },

    #[error("invalid sampling rate k={k} for universe n={n}")]
    InvalidRate { n: usize, k: usize },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("sample of size {size} exceeds 2k = {limit}; aborted")]
    Aborted { size: usize, limit: usize },
    #[error("sample is empty; aborted")]
    EmptySample,
    #[error("rank {t} exceeds available rank {max}")]
    RankTooLarge { t: usize, max: usize },
    #[error("radius must be positive, got {0}")]
    InvalidRadius(f64),

    #[error("gamma must lie in (0, 1), got {0}")]
    InvalidGamma(f64),

    #[error("problem {dims}x{dims} exceeds oracle limit {limit}")]
    TooLarge { dims: usize, limit: usize },
    #[error("problem is not strongly convex (smallest eigenvalue {lambda_min:e})")]
    NotStronglyConvex { lambda_min: f64 },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("rows have inconsistent widths: line {line} has {found} values, expected {expected}")]
    RaggedRows {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("kernel bandwidth must be positive, got {0}")]
    InvalidSigma(f64),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for the errors an estimator raises when its sample is unusable.
    pub fn is_abort(&self) -> bool {
        matches!(self, Error::Aborted { .. } | Error::EmptySample)
    }
}

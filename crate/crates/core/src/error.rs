use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("degenerate hull: {0}")]
    DegenerateHull(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("insufficient parents: need at least 2, got {0}")]
    InsufficientParents(usize),
    #[error("rank deficient: {0}")]
    RankDeficient(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("score out of range: {0}")]
    ScoreOutOfRange(String),
    #[error("singular friction regime: Re = {0} must exceed 100")]
    SingularRegime(f64),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("speed range not covered: {0}")]
    Coverage(String),
    #[error("invalid speed range: {0}")]
    InvalidSpeedRange(String),
    #[error("undefined loss: {0}")]
    UndefinedLoss(String),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("empty split: {0}")]
    EmptySplit(String),
    #[error("fit rejected: {0}")]
    FitRejected(String),
    #[error("provenance mismatch: {0}")]
    Provenance(String),
    #[error("format error in {path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: String, expected: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// Process exit code: 2 validation, 3 I/O, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::SingularRegime(_)
            | Error::Numerical(_)
            | Error::DegenerateHull(_)
            | Error::RankDeficient(_)
            | Error::UndefinedLoss(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

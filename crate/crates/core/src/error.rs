use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the simulator, the service, the data pipeline and the trainers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    #[error("value {value} at position {index} outside [{lo}, {hi}]")]
    Range {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("variance undefined for {rounds} round(s); at least 2 are required")]
    UndefinedVariance { rounds: usize },

    #[error("service error: {0}")]
    Service(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("idx parse error in {path}: {kind}")]
    Idx { path: PathBuf, kind: IdxError },

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {total} jobs failed; first failure: {first}")]
    Jobs {
        failed: usize,
        total: usize,
        first: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Distinct failure modes of the IDX container parser.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdxError {
    #[error("bad magic 0x{found:08x}, expected 0x{expected:08x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("truncated: header promises {expected} bytes, file holds {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

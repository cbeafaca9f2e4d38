use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("series shorter than one segment (length {len}, segment length {tau})")]
    SeriesTooShort { len: usize, tau: usize },

    #[error("graph needs at least two segments (T < 2, got T = {0})")]
    TooFewSegments(usize),

    #[error("{path}: row {row}: {msg}")]
    Data { path: String, row: usize, msg: String },

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("training diverged at iteration {iteration}: {reason}")]
    Diverged { iteration: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape { op, detail: detail.into() }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
}

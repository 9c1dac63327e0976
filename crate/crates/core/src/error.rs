use thiserror::Error;

pub type Result<T> = std::result::Result<T, MqeError>;

#[derive(Debug, Error)]
pub enum MqeError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("incomplete path table: missing ordered pair ({0}, {1})")]
    IncompleteTable(usize, usize),

    #[error("path reconstruction failed for pair ({a}, {b}): {reason}")]
    ReconstructionFailure { a: usize, b: usize, reason: String },

    #[error("numeric failure: {0}")]
    NumericFailure(String),

    #[error("{n} users exceeds the exhaustive enumeration limit of {limit}")]
    TooLarge { n: usize, limit: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl MqeError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        MqeError::InvalidArgument(msg.into())
    }

    /// Process exit code: 2 for numeric failures, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            MqeError::NumericFailure(_) | MqeError::ReconstructionFailure { .. } => 2,
            _ => 1,
        }
    }
}

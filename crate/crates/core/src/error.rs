use thiserror::Error;

/// Errors surfaced by the clustering engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        actual: String,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("need at least {min} {what}, got {actual}")]
    TooFew {
        what: &'static str,
        min: usize,
        actual: usize,
    },

    #[error("non-finite loss {value} at epoch {epoch}; aborting training")]
    NonFiniteLoss { epoch: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn dim(context: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            context,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}

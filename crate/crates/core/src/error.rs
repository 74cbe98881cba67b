use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported norm q = {0} (expected 1, 2 or inf)")]
    UnsupportedNorm(String),

    /// A schedule or bound formula was asked for outside the range where it holds.
    #[error("schedule precondition violated: {0}")]
    Schedule(String),

    #[error("instance generation failed: {0}")]
    Generation(String),

    #[error("solver stalled at stage {stage}: {reason}")]
    Stalled { stage: usize, reason: String },

    #[error("problem spec error at `{field}`: {reason}")]
    Schema { field: String, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn schema(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Schema {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("erasure rate {0} is outside [0, 1]")]
    ErasureDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("block length 2^{0} does not fit in a machine integer")]
    Overflow(u32),

    #[error("expected a block of length {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("decoder inconsistency at position {position}: two unerased estimates disagree")]
    Inconsistent { position: usize },

    #[error("exhaustive enumeration needs 2^{length} patterns, above the 2^{limit} budget")]
    EnumerationBudget { length: usize, limit: usize },

    #[error("interval {0} is outside the operation's domain")]
    IntervalDomain(String),

    #[error("interval division by {0}, which contains zero")]
    DivisionByZero(String),

    #[error("malformed tree: {0}")]
    MalformedTree(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

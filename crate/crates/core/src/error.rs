use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {what} needs at least {needed} observations, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("undefined correlation: input has zero variance")]
    UndefinedCorrelation,

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("rank-deficient matrix: {0}")]
    RankDeficient(String),

    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("no cointegration: Johansen trace test selected rank 0; supply a fixed cointegrating vector")]
    NoCointegration,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid scenario: {0}")]
    Config(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: String,
        expected: String,
        got: String,
    },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("svd failure on {rows}x{cols} matrix")]
    SvdFailure { rows: usize, cols: usize },

    #[error("eigen decomposition failed to converge on {0}x{0} matrix")]
    EigenFailure(usize),

    #[error("Q not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("C must have full column rank: rank {rank} < {cols}")]
    RankDeficient { rank: usize, cols: usize },

    #[error("empty objective: at least one weighted term must be active")]
    EmptyObjective,

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("psd block of side {side} exceeds configured cap {cap}")]
    PsdTooLarge { side: usize, cap: usize },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err(context: &str, expected: impl ToString, got: impl ToString) -> Error {
    Error::Dimension {
        context: context.to_string(),
        expected: expected.to_string(),
        got: got.to_string(),
    }
}

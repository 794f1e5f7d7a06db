use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("color {color} occurs in the matrix but has zero probability in the model")]
    ModelMismatch { color: usize },

    #[error("symbol {symbol} out of range for a table with {len} symbols")]
    SymbolOutOfRange { symbol: usize, len: usize },

    #[error("frequency table overflow: {0}")]
    TableOverflow(String),

    #[error("truncated stream: {0}")]
    Truncated(String),

    #[error("inconsistent stream: {0}")]
    Inconsistent(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("container format error: {0}")]
    Format(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("verification failed: {0}")]
    Verification(String),
}

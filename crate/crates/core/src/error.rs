use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CoreError {
    #[error("non-finite input at index {0}")]
    NonFiniteInput(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("empty term list")]
    EmptyTermList,
    #[error("release without a matching acquire")]
    DoubleRelease,
    #[error("invalid tolerance: {0}")]
    InvalidTolerance(String),
}

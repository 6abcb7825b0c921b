use lockstep_core::Layout;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("singular pivot in block for cell {0}")]
    SingularBlock(usize),
    #[error("layout mismatch: expected {expected:?}, got {got:?}")]
    LayoutMismatch { expected: Layout, got: Layout },
    #[error("matrix has not been factored")]
    NotFactored,
    #[error("rhs evaluation failed: {0}")]
    RhsFailure(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite input at index {0}")]
    NonFiniteInput(usize),
}

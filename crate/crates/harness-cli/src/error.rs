//! Harness-level errors: configuration problems, reference generation
//! failures, and metric grid mismatches.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("unknown model '{0}'")]
    UnknownModel(String),
    #[error("reference failed: {0}")]
    ReferenceFailed(String),
    #[error("run and reference time grids do not match")]
    GridMismatch,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Batch(#[from] lockstep_batching::BatchError),
}

//! Errors surfaced by batch assembly and execution, tagged with the
//! offending batch id so the caller can report which batch failed.

use lockstep_integrators::IntegrateError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("batch {batch_id}: empty batch")]
    EmptyBatch { batch_id: usize },
    #[error("batch {batch_id}: forcing length {got}, expected {expected}")]
    ForcingMismatch {
        batch_id: usize,
        expected: usize,
        got: usize,
    },
    #[error("batch {batch_id}: {source}")]
    Integrate {
        batch_id: usize,
        source: IntegrateError,
    },
    #[error("batch {batch_id}: worker panicked")]
    WorkerPanic { batch_id: usize },
}

impl BatchError {
    pub fn batch_id(&self) -> usize {
        match self {
            BatchError::EmptyBatch { batch_id }
            | BatchError::ForcingMismatch { batch_id, .. }
            | BatchError::Integrate { batch_id, .. }
            | BatchError::WorkerPanic { batch_id } => *batch_id,
        }
    }
}

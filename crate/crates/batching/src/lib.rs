//! Batch assembly and execution: cell-block layout reordering, patch
//! tiling, LPT work distribution with gated rebalancing, lockstep batch
//! integration, and a shared-queue concurrent driver.

mod concurrent;
mod error;
mod integrate;
mod layout;
mod patch;
mod plan;
mod problem;

pub use concurrent::{run_concurrent, BatchJob, BatchResult};
pub use error::BatchError;
pub use integrate::integrate_batch;
pub use layout::reorder;
pub use patch::{tile, Patch, DEFAULT_TILE_SIZE};
pub use plan::{partition_patches, rebalance_if_improved, BatchPlan, Rebalance};
pub use problem::BatchProblem;

pub use lockstep_core::{CellBlock, Layout};

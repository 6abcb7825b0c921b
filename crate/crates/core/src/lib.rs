//! Foundational numeric types for lockstep batched ODE integration:
//! tolerance strategies, WRMS weighting and norms, typical-value tracking,
//! fused vector operations, and a reusable vector memory pool.

pub mod block;
pub mod error;
pub mod fused;
pub mod pool;
pub mod stats;
pub mod sum;
pub mod tolerance;
pub mod typical;
pub mod weights;

pub use block::{CellBlock, Layout};
pub use error::CoreError;
pub use fused::fused_linear_combination;
pub use pool::{PoolStats, VectorPool};
pub use stats::IntegratorStats;
pub use sum::{dot, CompensatedSum};
pub use tolerance::{atol_from_typical, ToleranceSpec, ToleranceStrategy, DEFAULT_ATOL_FLOOR};
pub use typical::{update_typical_values, TypicalValues};
pub use weights::{compute_weights, wrms_norm, wrms_norm_raw, ErrorWeights};

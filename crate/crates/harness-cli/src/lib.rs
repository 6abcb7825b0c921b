//! Sweep harness: outer-loop dt_CFD emulation over the solution-approach
//! matrix, tight-tolerance reference generation, the averaged temperature
//! MSE metric, and CSV emission.

mod bench;
mod config;
mod error;
mod metric;
mod outer;
mod reference;
mod sweep;

pub use bench::run_bench;
pub use config::{Approach, SweepConfig, ALL_APPROACHES};
pub use error::HarnessError;
pub use metric::error_metric;
pub use outer::{initial_block, interval_grid, run_outer_loop, RunOutcome, RunOutput};
pub use reference::{
    compute_reference_with,
    compute_reference, default_cache_dir, Reference, REFERENCE_ATOL, REFERENCE_INTERVAL_FRAC,
    REFERENCE_RTOL,
};
pub use sweep::{
    ignition_threshold, run_row, run_sweep, sweep_reference, union_grid, RowOutcome,
    SweepResultRow, CSV_HEADER,
};

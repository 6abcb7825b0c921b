//! Typical-value tracking: per-component midpoints of the min/max range over
//! a cell population, used to scale absolute tolerances.

use crate::block::CellBlock;
use crate::error::CoreError;

#[derive(Debug, Clone, PartialEq)]
pub struct TypicalValues {
    pub tv: Vec<f64>,
    pub last_update_step: u64,
}

impl TypicalValues {
    /// Unmanaged typical values default each component to 1.
    pub fn unmanaged(n_comp: usize) -> TypicalValues {
        TypicalValues {
            tv: vec![1.0; n_comp],
            last_update_step: 0,
        }
    }
}

/// `tv_i = (min_i + max_i) / 2` over all cells of the block; constant between
/// updates.
pub fn update_typical_values(
    cells: &CellBlock,
    prev: &TypicalValues,
    step: u64,
) -> Result<TypicalValues, CoreError> {
    if cells.n_cells == 0 {
        return Err(CoreError::EmptyBatch);
    }
    debug_assert_eq!(prev.tv.len(), cells.n_comp);
    let mut tv = Vec::with_capacity(cells.n_comp);
    for k in 0..cells.n_comp {
        let (lo, hi) = cells.component_min_max(k);
        tv.push(0.5 * (lo + hi));
    }
    Ok(TypicalValues {
        tv,
        last_update_step: step,
    })
}

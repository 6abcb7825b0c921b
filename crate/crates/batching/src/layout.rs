//! Layout conversion between cell-major (CY) and component-major (YC)
//! storage. The permutation preserves every value bitwise, so a round trip
//! is an exact identity.

use lockstep_core::{CellBlock, Layout};

/// Returns a copy of `block` stored in `target` layout. A same-layout call
/// is an identity copy.
pub fn reorder(block: &CellBlock, target: Layout) -> CellBlock {
    if block.layout == target {
        return block.clone();
    }
    let mut out = CellBlock::zeros(block.n_cells, block.n_comp, target);
    for c in 0..block.n_cells {
        for k in 0..block.n_comp {
            let v = block.data[block.index(c, k)];
            let idx = out.index(c, k);
            out.data[idx] = v;
        }
    }
    out
}

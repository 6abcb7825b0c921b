//! Patches: contiguous cell ranges carrying a work estimate from the
//! previous outer step, plus tiling into bounded sub-ranges.

use std::ops::Range;

pub const DEFAULT_TILE_SIZE: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub cell_range: Range<usize>,
    /// Predicted integration effort (rhs-evaluation count from the previous
    /// outer step). A never-integrated patch defaults to its cell count.
    pub work_estimate: f64,
    pub tile_size: usize,
}

impl Patch {
    pub fn new(cell_range: Range<usize>, work_estimate: f64, tile_size: usize) -> Patch {
        assert!(tile_size >= 1, "tile_size must be at least 1");
        assert!(work_estimate >= 0.0, "work_estimate must be non-negative");
        Patch {
            cell_range,
            work_estimate,
            tile_size,
        }
    }

    /// A patch that has never been integrated: the uniform prior is one
    /// unit of work per cell.
    pub fn fresh(cell_range: Range<usize>, tile_size: usize) -> Patch {
        let work = cell_range.len() as f64;
        Patch::new(cell_range, work, tile_size)
    }

    pub fn n_cells(&self) -> usize {
        self.cell_range.len()
    }
}

/// Splits a patch into contiguous, non-overlapping tiles of at most
/// `tile_size` cells each, covering the patch exactly. Work estimates are
/// apportioned by cell count.
pub fn tile(patch: &Patch) -> Vec<Patch> {
    let n = patch.n_cells();
    if n == 0 {
        return Vec::new();
    }
    let per_cell = patch.work_estimate / n as f64;
    let mut tiles = Vec::with_capacity(n.div_ceil(patch.tile_size));
    let mut start = patch.cell_range.start;
    while start < patch.cell_range.end {
        let end = (start + patch.tile_size).min(patch.cell_range.end);
        tiles.push(Patch::new(
            start..end,
            per_cell * (end - start) as f64,
            patch.tile_size,
        ));
        start = end;
    }
    tiles
}

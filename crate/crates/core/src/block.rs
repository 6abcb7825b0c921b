//! Batched cell state storage with an explicit memory layout tag.

use crate::error::CoreError;

/// Memory layout of a [`CellBlock`].
///
/// `CellMajor` ("CY") keeps all components of a cell contiguous, which gives
/// the block-diagonal Jacobian structure expected by batched direct solvers.
/// `ComponentMajor` ("YC") keeps one component across all cells contiguous.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    CellMajor,
    ComponentMajor,
}

impl Layout {
    pub fn parse(s: &str) -> Option<Layout> {
        match s.to_ascii_lowercase().as_str() {
            "cy" | "cell-major" | "cellmajor" => Some(Layout::CellMajor),
            "yc" | "component-major" | "componentmajor" => Some(Layout::ComponentMajor),
            _ => None,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Layout::CellMajor => "cy",
            Layout::ComponentMajor => "yc",
        }
    }
}

/// Batched state of `n_cells x n_comp` values in a single contiguous buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct CellBlock {
    pub n_cells: usize,
    pub n_comp: usize,
    pub layout: Layout,
    pub data: Vec<f64>,
}

impl CellBlock {
    pub fn zeros(n_cells: usize, n_comp: usize, layout: Layout) -> CellBlock {
        CellBlock {
            n_cells,
            n_comp,
            layout,
            data: vec![0.0; n_cells * n_comp],
        }
    }

    pub fn from_data(
        n_cells: usize,
        n_comp: usize,
        layout: Layout,
        data: Vec<f64>,
    ) -> Result<CellBlock, CoreError> {
        if data.len() != n_cells * n_comp {
            return Err(CoreError::LengthMismatch {
                expected: n_cells * n_comp,
                got: data.len(),
            });
        }
        Ok(CellBlock {
            n_cells,
            n_comp,
            layout,
            data,
        })
    }

    /// Fill every cell with the same per-component state.
    pub fn replicate(cell: &[f64], n_cells: usize, layout: Layout) -> CellBlock {
        let n_comp = cell.len();
        let mut block = CellBlock::zeros(n_cells, n_comp, layout);
        for c in 0..n_cells {
            for (k, &v) in cell.iter().enumerate() {
                let i = block.index(c, k);
                block.data[i] = v;
            }
        }
        block
    }

    /// Flat index of (cell `c`, component `k`) under the current layout.
    ///
    /// CellMajor: `c * n_comp + k`; ComponentMajor: `k * n_cells + c`.
    #[inline]
    pub fn index(&self, c: usize, k: usize) -> usize {
        match self.layout {
            Layout::CellMajor => c * self.n_comp + k,
            Layout::ComponentMajor => k * self.n_cells + c,
        }
    }

    #[inline]
    pub fn get(&self, c: usize, k: usize) -> f64 {
        self.data[self.index(c, k)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, k: usize, v: f64) {
        let i = self.index(c, k);
        self.data[i] = v;
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// (min, max) of component `k` over all cells.
    pub fn component_min_max(&self, k: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in 0..self.n_cells {
            let v = self.get(c, k);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Copy the state of cell `c` into `out` (length `n_comp`).
    pub fn extract_cell(&self, c: usize, out: &mut [f64]) {
        for k in 0..self.n_comp {
            out[k] = self.get(c, k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_maps_match_spec() {
        let b = CellBlock::from_data(
            2,
            2,
            Layout::CellMajor,
            vec![10.0, 11.0, 20.0, 21.0],
        )
        .unwrap();
        assert_eq!(b.get(0, 0), 10.0);
        assert_eq!(b.get(0, 1), 11.0);
        assert_eq!(b.get(1, 0), 20.0);
        assert_eq!(b.get(1, 1), 21.0);

        let b = CellBlock::from_data(
            2,
            2,
            Layout::ComponentMajor,
            vec![10.0, 20.0, 11.0, 21.0],
        )
        .unwrap();
        assert_eq!(b.get(0, 0), 10.0);
        assert_eq!(b.get(1, 0), 20.0);
        assert_eq!(b.get(0, 1), 11.0);
        assert_eq!(b.get(1, 1), 21.0);
    }

    #[test]
    fn bad_length_rejected() {
        let err = CellBlock::from_data(2, 2, Layout::CellMajor, vec![0.0; 3]).unwrap_err();
        assert_eq!(
            err,
            CoreError::LengthMismatch {
                expected: 4,
                got: 3
            }
        );
    }
}

//! Block-diagonal matrices and batched LU factorization. Each block is an
//! independent dense row-major `n_comp x n_comp` system belonging to one cell.

use crate::LinalgError;
use lockstep_core::{CellBlock, Layout};

/// When a pivot magnitude falls at or below this value the block is declared
/// singular. Only true zeros are guarded; near-singularity is left to the
/// Newton layer's step-size cut.
const PIVOT_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone)]
pub struct BlockDiagMatrix {
    pub n_cells: usize,
    pub n_comp: usize,
    /// `n_cells` dense row-major blocks stored back to back; after
    /// factorization each block holds its L\U factors with unit-diagonal L.
    pub blocks: Vec<f64>,
    /// Per-block pivot rows, `n_cells * n_comp` entries after factorization.
    pub pivots: Vec<usize>,
    factored: bool,
}

impl BlockDiagMatrix {
    pub fn zeros(n_cells: usize, n_comp: usize) -> BlockDiagMatrix {
        BlockDiagMatrix {
            n_cells,
            n_comp,
            blocks: vec![0.0; n_cells * n_comp * n_comp],
            pivots: Vec::new(),
            factored: false,
        }
    }

    pub fn from_blocks(n_cells: usize, n_comp: usize, blocks: Vec<f64>) -> BlockDiagMatrix {
        assert_eq!(blocks.len(), n_cells * n_comp * n_comp);
        BlockDiagMatrix {
            n_cells,
            n_comp,
            blocks,
            pivots: Vec::new(),
            factored: false,
        }
    }

    /// One block's rows, repeated for every cell.
    pub fn replicate(block: &[f64], n_comp: usize, n_cells: usize) -> BlockDiagMatrix {
        assert_eq!(block.len(), n_comp * n_comp);
        let mut blocks = Vec::with_capacity(n_cells * block.len());
        for _ in 0..n_cells {
            blocks.extend_from_slice(block);
        }
        BlockDiagMatrix::from_blocks(n_cells, n_comp, blocks)
    }

    pub fn block(&self, cell: usize) -> &[f64] {
        let sz = self.n_comp * self.n_comp;
        &self.blocks[cell * sz..(cell + 1) * sz]
    }

    pub fn block_mut(&mut self, cell: usize) -> &mut [f64] {
        let sz = self.n_comp * self.n_comp;
        &mut self.blocks[cell * sz..(cell + 1) * sz]
    }

    pub fn is_factored(&self) -> bool {
        self.factored
    }

    /// Marks unfactored so fresh entries can be written in place.
    pub fn reset(&mut self) {
        self.factored = false;
        self.pivots.clear();
    }

    /// Dense matrix-vector product `out = M x` over flat cell-major storage.
    /// Valid only before factorization overwrites the entries.
    pub fn matvec_flat(&self, x: &[f64], out: &mut [f64]) {
        assert!(!self.factored, "matvec on factored storage");
        let n = self.n_comp;
        for c in 0..self.n_cells {
            let blk = self.block(c);
            let xc = &x[c * n..(c + 1) * n];
            let oc = &mut out[c * n..(c + 1) * n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += blk[i * n + j] * xc[j];
                }
                oc[i] = acc;
            }
        }
    }
}

/// Factors every block in place with partial pivoting. Blocks are fully
/// independent; a singular block reports its cell index.
pub fn lu_factor_batched(m: &mut BlockDiagMatrix) -> Result<(), LinalgError> {
    let n = m.n_comp;
    m.pivots.clear();
    m.pivots.resize(m.n_cells * n, 0);
    for cell in 0..m.n_cells {
        let sz = n * n;
        let blk = &mut m.blocks[cell * sz..(cell + 1) * sz];
        let piv = &mut m.pivots[cell * n..(cell + 1) * n];
        for k in 0..n {
            let mut p = k;
            let mut best = blk[k * n + k].abs();
            for r in k + 1..n {
                let v = blk[r * n + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= PIVOT_THRESHOLD {
                return Err(LinalgError::SingularBlock(cell));
            }
            piv[k] = p;
            if p != k {
                for j in 0..n {
                    blk.swap(k * n + j, p * n + j);
                }
            }
            let akk = blk[k * n + k];
            for r in k + 1..n {
                let l = blk[r * n + k] / akk;
                blk[r * n + k] = l;
                for j in k + 1..n {
                    blk[r * n + j] -= l * blk[k * n + j];
                }
            }
        }
    }
    m.factored = true;
    Ok(())
}

/// Solves `M x = b` in place over flat cell-major storage.
pub fn lu_solve_flat(m: &BlockDiagMatrix, x: &mut [f64]) -> Result<(), LinalgError> {
    if !m.factored {
        return Err(LinalgError::NotFactored);
    }
    let n = m.n_comp;
    if x.len() != m.n_cells * n {
        return Err(LinalgError::DimensionMismatch {
            expected: m.n_cells * n,
            got: x.len(),
        });
    }
    for cell in 0..m.n_cells {
        let blk = m.block(cell);
        let piv = &m.pivots[cell * n..(cell + 1) * n];
        let xc = &mut x[cell * n..(cell + 1) * n];
        // Forward substitution with the recorded row swaps.
        for k in 0..n {
            xc.swap(k, piv[k]);
            for r in k + 1..n {
                xc[r] -= blk[r * n + k] * xc[k];
            }
        }
        // Back substitution.
        for k in (0..n).rev() {
            for j in k + 1..n {
                xc[k] -= blk[k * n + j] * xc[j];
            }
            xc[k] /= blk[k * n + k];
        }
    }
    Ok(())
}

/// Solves `M x = b` in place for a cell block, which must be cell-major so
/// each block's unknowns are contiguous.
pub fn lu_solve_batched(m: &BlockDiagMatrix, b: &mut CellBlock) -> Result<(), LinalgError> {
    if b.layout != Layout::CellMajor {
        return Err(LinalgError::LayoutMismatch {
            expected: Layout::CellMajor,
            got: b.layout,
        });
    }
    if b.n_cells != m.n_cells || b.n_comp != m.n_comp {
        return Err(LinalgError::DimensionMismatch {
            expected: m.n_cells * m.n_comp,
            got: b.n_cells * b.n_comp,
        });
    }
    lu_solve_flat(m, &mut b.data)
}

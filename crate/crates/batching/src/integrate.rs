//! Lockstep batch integration: all cells in a block advanced with one
//! shared adaptive step sequence, accepted against the WRMS norm over the
//! whole batch vector.

use lockstep_core::{CellBlock, IntegratorStats, Layout, ToleranceSpec, VectorPool};
use lockstep_integrators::{integrate_bdf_problem, BdfOptions, SolverChoice};
use lockstep_models::OdeSystem;

use crate::error::BatchError;
use crate::layout::reorder;
use crate::problem::BatchProblem;

/// Integrates every cell of `block` over `[t0, t_end]` in lockstep.
///
/// `f_ext` holds the per-cell frozen forcing, flat cell-major
/// (`n_cells * n_comp` values); `tol.atol` spans one cell and is tiled
/// across the batch. Direct solvers need cell-major data, so a
/// component-major block is converted on entry and the endpoint is returned
/// in the input layout. Errors are tagged with `batch_id`.
#[allow(clippy::too_many_arguments)]
pub fn integrate_batch(
    block: &CellBlock,
    f_ext: &[f64],
    system: &dyn OdeSystem,
    t0: f64,
    t_end: f64,
    tol: &ToleranceSpec,
    solver: SolverChoice,
    opts: &BdfOptions,
    pool: &mut VectorPool,
    batch_id: usize,
) -> Result<(CellBlock, IntegratorStats), BatchError> {
    let n_cells = block.n_cells;
    let n_comp = block.n_comp;
    if n_cells == 0 {
        return Err(BatchError::EmptyBatch { batch_id });
    }
    if f_ext.len() != n_cells * n_comp {
        return Err(BatchError::ForcingMismatch {
            batch_id,
            expected: n_cells * n_comp,
            got: f_ext.len(),
        });
    }

    let input_layout = block.layout;
    let cy = reorder(block, Layout::CellMajor);
    let problem = BatchProblem::with_forcing(system, n_cells, f_ext.to_vec());

    let mut atol = Vec::with_capacity(n_cells * n_comp);
    for _ in 0..n_cells {
        atol.extend_from_slice(&tol.atol);
    }

    let result = integrate_bdf_problem(
        &problem, &cy.data, t0, t_end, tol.rtol, &atol, solver, opts, pool,
    )
    .map_err(|source| BatchError::Integrate { batch_id, source })?;

    let out_cy = CellBlock {
        n_cells,
        n_comp,
        layout: Layout::CellMajor,
        data: result.y,
    };
    Ok((reorder(&out_cy, input_layout), result.stats))
}

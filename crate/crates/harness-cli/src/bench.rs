//! Batch-size by solver timing table: integrates the same workload at a
//! range of batch widths under each solver stack and reports wall time and
//! step counts.

use std::time::Instant;

use lockstep_core::{CellBlock, ToleranceSpec, VectorPool};
use lockstep_integrators::BdfOptions;
use lockstep_models::{by_name, initial_state};

use crate::config::{Approach, SweepConfig};
use crate::error::HarnessError;
use crate::outer::initial_block;

pub fn run_bench(
    cfg: &SweepConfig,
    sizes: &[usize],
    approaches: &[Approach],
) -> Result<String, HarnessError> {
    let system =
        by_name(&cfg.model).map_err(|_| HarnessError::UnknownModel(cfg.model.clone()))?;
    let n_comp = system.n_comp();
    let y0 = initial_state(&cfg.model)
        .map_err(|_| HarnessError::UnknownModel(cfg.model.clone()))?;
    let eta = cfg.effective_etas()[0];
    let spec = ToleranceSpec::fixed(cfg.rtol, eta, n_comp)
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    let opts = BdfOptions::default();
    let t_end = cfg.t_end.min(cfg.dt_cfd_list[0]);

    let mut table = format!(
        "# model={} t_end={:e} rtol={:e} eta={:e}\nn_cells",
        cfg.model, t_end, cfg.rtol, eta
    );
    for a in approaches {
        table.push_str(&format!(",{a}_ms,{a}_steps"));
    }
    table.push('\n');

    for &n_cells in sizes {
        let mut row_cfg = cfg.clone();
        row_cfg.n_cells = n_cells;
        let block = if n_cells == 1 {
            CellBlock::replicate(&y0, 1, cfg.layout)
        } else {
            initial_block(&row_cfg)?
        };
        let f_ext = vec![0.0; n_cells * n_comp];
        table.push_str(&format!("{n_cells}"));
        for a in approaches {
            let mut pool = VectorPool::new();
            let start = Instant::now();
            let (_, stats) = lockstep_batching::integrate_batch(
                &block,
                &f_ext,
                system.as_ref(),
                0.0,
                t_end,
                &spec,
                a.solver(),
                &opts,
                &mut pool,
                0,
            )?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            table.push_str(&format!(",{ms:.3},{}", stats.n_steps));
        }
        table.push('\n');
    }
    Ok(table)
}

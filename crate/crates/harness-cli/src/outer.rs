//! The outer loop: dt_CFD emulation. The horizon is cut into uniform
//! intervals, the batch is integrated over each in turn, and every interval
//! endpoint seeds the next. Typical values and absolute tolerances refresh
//! between intervals when the approach calls for it.

use std::time::{Duration, Instant};

use lockstep_batching::integrate_batch;
use lockstep_core::{
    update_typical_values, CellBlock, IntegratorStats, ToleranceSpec, TypicalValues, VectorPool,
    DEFAULT_ATOL_FLOOR,
};
use lockstep_integrators::{BdfOptions, IntegrateError};
use lockstep_models::{by_name, initial_state};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Approach, SweepConfig};
use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Completed,
    TimedOut,
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Interval endpoint times (the last one is t_end).
    pub times: Vec<f64>,
    /// Cell-0 state at each recorded endpoint.
    pub states: Vec<Vec<f64>>,
    pub stats: IntegratorStats,
    pub outcome: RunOutcome,
    /// Pool fresh-allocation count after each interval (steady-state probe).
    pub pool_fresh: Vec<u64>,
}

/// Endpoint grid for a horizon cut into uniform dt_cfd intervals; the last
/// interval may be short and is recorded like any other.
pub fn interval_grid(t_end: f64, dt_cfd: f64) -> Vec<f64> {
    let mut ts = Vec::new();
    let mut k = 1u64;
    loop {
        let t = k as f64 * dt_cfd;
        if t >= t_end * (1.0 - 1e-12) {
            ts.push(t_end);
            return ts;
        }
        ts.push(t);
        k += 1;
    }
}

/// Builds the initial batch: cell 0 holds the nominal initial state, the
/// remaining cells carry a small seeded relative perturbation.
pub fn initial_block(cfg: &SweepConfig) -> Result<CellBlock, HarnessError> {
    let y0 = if cfg.y0.is_empty() {
        initial_state(&cfg.model).map_err(|_| HarnessError::UnknownModel(cfg.model.clone()))?
    } else {
        cfg.y0.clone()
    };
    let mut block = CellBlock::replicate(&y0, cfg.n_cells, cfg.layout);
    if cfg.perturb > 0.0 && cfg.n_cells > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for c in 1..cfg.n_cells {
            for (k, &v) in y0.iter().enumerate() {
                let delta: f64 = rng.gen_range(-1.0..1.0);
                block.set(c, k, v * (1.0 + cfg.perturb * delta));
            }
        }
    }
    Ok(block)
}

/// Runs one sweep row's outer loop for a given approach, dt_cfd, and eta.
pub fn run_outer_loop(
    cfg: &SweepConfig,
    approach: Approach,
    dt_cfd: f64,
    eta: f64,
) -> Result<RunOutput, HarnessError> {
    let system = by_name(&cfg.model).map_err(|_| HarnessError::UnknownModel(cfg.model.clone()))?;
    let n_comp = system.n_comp();
    let mut block = initial_block(cfg)?;
    let f_ext = vec![0.0; cfg.n_cells * n_comp];

    let start = Instant::now();
    let deadline = start + Duration::from_secs_f64(cfg.timeout_seconds);
    let opts = BdfOptions {
        deadline: Some(deadline),
        ..BdfOptions::default()
    };
    let mut pool = VectorPool::new();

    let times = interval_grid(cfg.t_end, dt_cfd);
    let mut states = Vec::with_capacity(times.len());
    let mut pool_fresh = Vec::with_capacity(times.len());
    let mut stats = IntegratorStats::default();
    let mut tv = TypicalValues::unmanaged(n_comp);
    let mut t_prev = 0.0;

    for (i, &t_next) in times.iter().enumerate() {
        if Instant::now() >= deadline {
            return Ok(RunOutput {
                times,
                states,
                stats,
                outcome: RunOutcome::TimedOut,
                pool_fresh,
            });
        }
        let spec = if approach.typical_values {
            if i as u64 % cfg.typical_update_intervals.max(1) == 0 {
                tv = update_typical_values(&block, &tv, i as u64)
                    .map_err(|e| HarnessError::Config(e.to_string()))?;
            }
            ToleranceSpec::typical(cfg.rtol, eta, 0, DEFAULT_ATOL_FLOOR, Some(&tv), n_comp)
        } else {
            ToleranceSpec::fixed(cfg.rtol, eta, n_comp)
        }
        .map_err(|e| HarnessError::Config(e.to_string()))?;

        match integrate_batch(
            &block,
            &f_ext,
            system.as_ref(),
            t_prev,
            t_next,
            &spec,
            approach.solver(),
            &opts,
            &mut pool,
            i,
        ) {
            Ok((endpoint, interval_stats)) => {
                stats.merge(&interval_stats);
                block = endpoint;
                let mut cell0 = vec![0.0; n_comp];
                block.extract_cell(0, &mut cell0);
                states.push(cell0);
                pool_fresh.push(pool.stats().fresh_allocations);
                t_prev = t_next;
            }
            Err(err) => {
                let timed_out = matches!(
                    &err,
                    lockstep_batching::BatchError::Integrate {
                        source: IntegrateError::DeadlineExceeded { .. },
                        ..
                    }
                );
                let outcome = if timed_out {
                    RunOutcome::TimedOut
                } else {
                    RunOutcome::Failed(err.to_string())
                };
                return Ok(RunOutput {
                    times,
                    states,
                    stats,
                    outcome,
                    pool_fresh,
                });
            }
        }
    }

    Ok(RunOutput {
        times,
        states,
        stats,
        outcome: RunOutcome::Completed,
        pool_fresh,
    })
}

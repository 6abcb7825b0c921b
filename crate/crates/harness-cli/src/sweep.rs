//! The sweep driver: the Cartesian grid of approaches, outer time steps,
//! and tolerance scalings, with one CSV row per combination. Row failures
//! are recorded in the outcome column and never abort the sweep.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use lockstep_core::IntegratorStats;
use lockstep_models::{by_name, initial_state, ToyIgnition};

use crate::config::{Approach, SweepConfig};
use crate::error::HarnessError;
use crate::metric::error_metric;
use crate::outer::{interval_grid, run_outer_loop, RunOutcome};
use crate::reference::{compute_reference_with, Reference, REFERENCE_INTERVAL_FRAC};

pub const CSV_HEADER: &str =
    "approach,dt_cfd,eta,avg_mse_T,wall_time_s,outcome,n_steps,n_rhs,n_newton,n_lin,n_jac,n_err_fail,n_conv_fail";

#[derive(Debug, Clone, PartialEq)]
pub enum RowOutcome {
    Completed,
    TimedOut,
    NoIgnition,
    Failed(String),
}

impl std::fmt::Display for RowOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RowOutcome::Completed => write!(f, "completed"),
            RowOutcome::TimedOut => write!(f, "timed_out"),
            RowOutcome::NoIgnition => write!(f, "no_ignition"),
            RowOutcome::Failed(msg) => write!(f, "failed({})", msg.replace(',', ";")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepResultRow {
    pub approach: Approach,
    pub dt_cfd: f64,
    pub eta: f64,
    /// Present only for completed rows.
    pub avg_mse_temperature: Option<f64>,
    pub wall_time_s: f64,
    pub outcome: RowOutcome,
    pub stats: IntegratorStats,
}

impl SweepResultRow {
    pub fn to_csv_line(&self) -> String {
        let mse = match (&self.outcome, self.avg_mse_temperature) {
            (RowOutcome::Completed, Some(m)) => format!("{m:e}"),
            _ => String::new(),
        };
        format!(
            "{},{:e},{:e},{},{:.6},{},{},{},{},{},{},{},{}",
            self.approach,
            self.dt_cfd,
            self.eta,
            mse,
            self.wall_time_s,
            self.outcome,
            self.stats.n_steps,
            self.stats.n_rhs_evals,
            self.stats.n_newton_iters,
            self.stats.n_lin_iters,
            self.stats.n_jac_evals,
            self.stats.n_err_test_fails,
            self.stats.n_conv_fails,
        )
    }
}

/// Half the adiabatic temperature rise over the initial state; a completed
/// ignition run peaking below this counts as NoIgnition.
pub fn ignition_threshold(cfg: &SweepConfig) -> Option<f64> {
    if cfg.model != "ignition" {
        return None;
    }
    let y0 = if cfg.y0.is_empty() {
        initial_state(&cfg.model).ok()?
    } else {
        cfg.y0.clone()
    };
    let q = ToyIgnition::default().q;
    Some(y0[1] + 0.5 * q * y0[0])
}

/// Runs one grid point. The reference is optional: without it (or without
/// a temperature component) the error metric is omitted.
pub fn run_row(
    cfg: &SweepConfig,
    approach: Approach,
    dt_cfd: f64,
    eta: f64,
    reference: Option<&Reference>,
) -> SweepResultRow {
    let start = Instant::now();
    let run = run_outer_loop(cfg, approach, dt_cfd, eta);
    let wall_time_s = start.elapsed().as_secs_f64();

    let (outcome, avg_mse, stats) = match run {
        Err(e) => (RowOutcome::Failed(e.to_string()), None, IntegratorStats::default()),
        Ok(out) => {
            let temp_idx = by_name(&cfg.model)
                .ok()
                .and_then(|m| m.temperature_index());
            let outcome = match out.outcome {
                RunOutcome::TimedOut => RowOutcome::TimedOut,
                RunOutcome::Failed(msg) => RowOutcome::Failed(msg),
                RunOutcome::Completed => {
                    let extinct = match (ignition_threshold(cfg), temp_idx) {
                        (Some(threshold), Some(k)) => out
                            .states
                            .iter()
                            .map(|s| s[k])
                            .fold(f64::NEG_INFINITY, f64::max)
                            < threshold,
                        _ => false,
                    };
                    if extinct {
                        RowOutcome::NoIgnition
                    } else {
                        RowOutcome::Completed
                    }
                }
            };
            let mse = match (&outcome, reference, temp_idx) {
                (RowOutcome::Completed, Some(r), Some(k)) => {
                    error_metric(&out.times, &out.states, r, k).ok()
                }
                _ => None,
            };
            (outcome, mse, out.stats)
        }
    };

    SweepResultRow {
        approach,
        dt_cfd,
        eta,
        avg_mse_temperature: avg_mse,
        wall_time_s,
        outcome,
        stats,
    }
}

/// Union of the interval endpoint grids over every dt_cfd in the sweep.
pub fn union_grid(cfg: &SweepConfig) -> Vec<f64> {
    let mut all = Vec::new();
    for &dt in &cfg.dt_cfd_list {
        all.extend(interval_grid(cfg.t_end, dt));
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.dedup();
    all
}

/// Prepares the shared reference for a sweep, when the model exposes a
/// temperature component.
pub fn sweep_reference(cfg: &SweepConfig) -> Result<Option<Reference>, HarnessError> {
    let system =
        by_name(&cfg.model).map_err(|_| HarnessError::UnknownModel(cfg.model.clone()))?;
    if system.temperature_index().is_none() {
        return Ok(None);
    }
    let grid = union_grid(cfg);
    let y0 = if cfg.y0.is_empty() { None } else { Some(cfg.y0.as_slice()) };
    compute_reference_with(
        &cfg.model,
        cfg.t_end,
        &grid,
        y0,
        REFERENCE_INTERVAL_FRAC,
        cfg.cache_dir.as_deref(),
    )
    .map(Some)
}

/// Runs the full Cartesian grid and returns the rows in deterministic
/// order (approaches, then dt_cfd, then eta) plus the CSV text.
pub fn run_sweep(cfg: &SweepConfig) -> Result<(Vec<SweepResultRow>, String), HarnessError> {
    cfg.validate()?;
    let reference = sweep_reference(cfg)?;
    let etas = cfg.effective_etas();

    let mut grid_points = Vec::new();
    for &approach in &cfg.approaches {
        for &dt in &cfg.dt_cfd_list {
            for &eta in &etas {
                grid_points.push((approach, dt, eta));
            }
        }
    }

    let rows = if cfg.parallel_rows > 1 {
        let next = AtomicUsize::new(0);
        let slots: Vec<Mutex<Option<SweepResultRow>>> =
            grid_points.iter().map(|_| Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..cfg.parallel_rows {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    if i >= grid_points.len() {
                        break;
                    }
                    let (approach, dt, eta) = grid_points[i];
                    let row = run_row(cfg, approach, dt, eta, reference.as_ref());
                    *slots[i].lock().expect("row slot poisoned") = Some(row);
                });
            }
        });
        slots
            .into_iter()
            .map(|s| s.into_inner().expect("row slot poisoned").expect("row computed"))
            .collect()
    } else {
        grid_points
            .iter()
            .map(|&(approach, dt, eta)| run_row(cfg, approach, dt, eta, reference.as_ref()))
            .collect::<Vec<_>>()
    };

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for row in &rows {
        csv.push_str(&row.to_csv_line());
        csv.push('\n');
    }
    Ok((rows, csv))
}

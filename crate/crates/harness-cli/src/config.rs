//! Sweep configuration: the solution-approach matrix, grids, and defaults.
//! Configs load from flat key=value files with CLI-flag overrides.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use lockstep_core::Layout;
use lockstep_integrators::{JacobianKind, SolverChoice};

use crate::error::HarnessError;

/// A solution approach pairs a nonlinear/linear solver stack (the digit)
/// with a tolerance strategy (the letter): 1 = inexact Newton with
/// matrix-free GMRES, 2 = modified Newton with direct solves and an
/// analytic Jacobian, 3 = same with a numerical Jacobian; A = fixed scalar
/// absolute tolerance (atol = eta), B = typical-value tolerances
/// (atol_i = eta * tv_i).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Approach {
    pub digit: u8,
    pub typical_values: bool,
}

pub const ALL_APPROACHES: [Approach; 6] = [
    Approach { digit: 1, typical_values: false },
    Approach { digit: 1, typical_values: true },
    Approach { digit: 2, typical_values: false },
    Approach { digit: 2, typical_values: true },
    Approach { digit: 3, typical_values: false },
    Approach { digit: 3, typical_values: true },
];

impl Approach {
    pub fn solver(&self) -> SolverChoice {
        match self.digit {
            1 => SolverChoice::InexactNewtonGmres,
            2 => SolverChoice::ModifiedNewtonDirect(JacobianKind::Analytic),
            _ => SolverChoice::ModifiedNewtonDirect(JacobianKind::Numerical),
        }
    }
}

impl fmt::Display for Approach {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            self.digit,
            if self.typical_values { 'B' } else { 'A' }
        )
    }
}

impl FromStr for Approach {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Approach, HarnessError> {
        let bad = || HarnessError::Config(format!("invalid approach '{s}' (expected e.g. 1A, 2B)"));
        let mut chars = s.trim().chars();
        let digit = match chars.next() {
            Some(c @ '1'..='3') => c as u8 - b'0',
            _ => return Err(bad()),
        };
        let typical_values = match chars.next().map(|c| c.to_ascii_uppercase()) {
            Some('A') => false,
            Some('B') => true,
            _ => return Err(bad()),
        };
        if chars.next().is_some() {
            return Err(bad());
        }
        Ok(Approach {
            digit,
            typical_values,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub model: String,
    pub approaches: Vec<Approach>,
    pub dt_cfd_list: Vec<f64>,
    pub eta_list: Vec<f64>,
    pub rtol: f64,
    pub t_end: f64,
    pub n_cells: usize,
    pub timeout_seconds: f64,
    /// Refresh typical values every this many outer intervals (approach B).
    pub typical_update_intervals: u64,
    pub seed: u64,
    /// Relative amplitude of the seeded per-cell initial perturbation.
    pub perturb: f64,
    pub workers: usize,
    pub tile_size: usize,
    pub layout: Layout,
    pub parallel_rows: usize,
    pub out: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    /// Initial per-cell state override; empty means the model default.
    pub y0: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> SweepConfig {
        SweepConfig {
            model: "ignition".to_string(),
            approaches: vec!["2B".parse().unwrap()],
            dt_cfd_list: vec![1e-4],
            eta_list: vec![1e-10],
            rtol: 1e-7,
            t_end: 0.1,
            n_cells: 8,
            timeout_seconds: 60.0,
            typical_update_intervals: 1,
            seed: 0,
            perturb: 1e-3,
            workers: 1,
            tile_size: 1024,
            layout: Layout::CellMajor,
            parallel_rows: 1,
            out: None,
            cache_dir: None,
            y0: Vec::new(),
        }
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, HarnessError>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| HarnessError::Config(format!("{key}: '{s}': {e}")))
        })
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T, HarnessError>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse::<T>()
        .map_err(|e| HarnessError::Config(format!("{key}: '{value}': {e}")))
}

impl SweepConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        match key {
            "model" => self.model = value.trim().to_string(),
            "approaches" | "approach" => self.approaches = parse_list(key, value)?,
            "dt_cfd" | "dt_cfd_list" => self.dt_cfd_list = parse_list(key, value)?,
            "eta" | "eta_list" => self.eta_list = parse_list(key, value)?,
            "rtol" => self.rtol = parse_one(key, value)?,
            "t_end" => self.t_end = parse_one(key, value)?,
            "n_cells" | "cells" => self.n_cells = parse_one(key, value)?,
            "timeout_seconds" | "timeout" => self.timeout_seconds = parse_one(key, value)?,
            "typical_update_intervals" => {
                self.typical_update_intervals = parse_one(key, value)?
            }
            "seed" => self.seed = parse_one(key, value)?,
            "perturb" => self.perturb = parse_one(key, value)?,
            "workers" => self.workers = parse_one(key, value)?,
            "tile_size" => self.tile_size = parse_one(key, value)?,
            "layout" => {
                self.layout = Layout::parse(value.trim()).ok_or_else(|| {
                    HarnessError::Config(format!("layout: '{value}' (expected CY or YC)"))
                })?
            }
            "parallel_rows" => self.parallel_rows = parse_one(key, value)?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            "y0" => self.y0 = parse_list(key, value)?,
            "cache_dir" => self.cache_dir = Some(PathBuf::from(value.trim())),
            _ => return Err(HarnessError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Loads `key=value` lines; `#` starts a comment, blank lines ignored.
    pub fn apply_file(&mut self, path: &std::path::Path) -> Result<(), HarnessError> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("{}:{}: expected key=value", path.display(), lineno + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.approaches.is_empty() {
            return Err(HarnessError::Config("no approaches selected".into()));
        }
        if self.dt_cfd_list.is_empty() {
            return Err(HarnessError::Config("dt_cfd list is empty".into()));
        }
        if self.dt_cfd_list.iter().any(|&dt| !(dt > 0.0)) {
            return Err(HarnessError::Config("dt_cfd values must be positive".into()));
        }
        if !(self.t_end > 0.0) || !(self.rtol > 0.0) {
            return Err(HarnessError::Config("t_end and rtol must be positive".into()));
        }
        if self.n_cells == 0 {
            return Err(HarnessError::Config("n_cells must be at least 1".into()));
        }
        Ok(())
    }

    /// Effective etas: an empty eta grid degenerates to the single default
    /// absolute tolerance, which then appears in the eta column.
    pub fn effective_etas(&self) -> Vec<f64> {
        if self.eta_list.is_empty() {
            vec![SweepConfig::default().eta_list[0]]
        } else {
            self.eta_list.clone()
        }
    }

    pub fn print(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x:e}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        let approaches = self
            .approaches
            .iter()
            .map(Approach::to_string)
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "model={}\napproaches={}\ndt_cfd={}\neta={}\nrtol={:e}\nt_end={:e}\n\
             n_cells={}\ntimeout_seconds={}\ntypical_update_intervals={}\nseed={}\n\
             perturb={:e}\nworkers={}\ntile_size={}\nlayout={}\nparallel_rows={}\n",
            self.model,
            approaches,
            list(&self.dt_cfd_list),
            list(&self.eta_list),
            self.rtol,
            self.t_end,
            self.n_cells,
            self.timeout_seconds,
            self.typical_update_intervals,
            self.seed,
            self.perturb,
            self.workers,
            self.tile_size,
            self.layout.tag(),
            self.parallel_rows,
        )
    }
}

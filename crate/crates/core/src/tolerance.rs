//! Tolerance selection: fixed scalar absolute tolerances or per-component
//! tolerances derived from typical values.

use crate::block::Layout;
use crate::error::CoreError;
use crate::typical::TypicalValues;

/// Smallest permitted absolute tolerance. Keeps weights finite when a
/// typical value is zero (a component absent everywhere).
pub const DEFAULT_ATOL_FLOOR: f64 = 1e-30;

#[derive(Debug, Clone, PartialEq)]
pub enum ToleranceStrategy {
    FixedScalar {
        value: f64,
    },
    TypicalValues {
        eta: f64,
        update_interval_steps: u64,
        atol_floor: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceSpec {
    pub rtol: f64,
    /// Per-component absolute tolerances.
    pub atol: Vec<f64>,
    pub strategy: ToleranceStrategy,
}

impl ToleranceSpec {
    /// Fixed scalar absolute tolerance for every component.
    pub fn fixed(rtol: f64, value: f64, n_comp: usize) -> Result<ToleranceSpec, CoreError> {
        let spec = ToleranceSpec {
            rtol,
            atol: vec![value; n_comp],
            strategy: ToleranceStrategy::FixedScalar { value },
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Typical-value tolerances. With no managed typical values each
    /// component defaults to 1, so `atol_i = max(eta, floor)`.
    pub fn typical(
        rtol: f64,
        eta: f64,
        update_interval_steps: u64,
        atol_floor: f64,
        tv: Option<&TypicalValues>,
        n_comp: usize,
    ) -> Result<ToleranceSpec, CoreError> {
        let atol = match tv {
            Some(tv) => atol_from_typical(&tv.tv, eta, atol_floor),
            None => vec![(eta).max(atol_floor); n_comp],
        };
        let spec = ToleranceSpec {
            rtol,
            atol,
            strategy: ToleranceStrategy::TypicalValues {
                eta,
                update_interval_steps,
                atol_floor,
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.rtol > 0.0) && self.rtol != 0.0 {
            return Err(CoreError::InvalidTolerance(format!(
                "rtol must be nonnegative, got {}",
                self.rtol
            )));
        }
        if self.atol.is_empty() {
            return Err(CoreError::InvalidTolerance("empty atol".into()));
        }
        for &a in &self.atol {
            if !(a > 0.0) {
                return Err(CoreError::InvalidTolerance(format!(
                    "atol components must be positive, got {a}"
                )));
            }
        }
        if let ToleranceStrategy::FixedScalar { value } = self.strategy {
            if self.atol.iter().any(|&a| a != value) {
                return Err(CoreError::InvalidTolerance(
                    "fixed-scalar strategy requires equal atol components".into(),
                ));
            }
        }
        Ok(())
    }

    /// Recompute `atol` from fresh typical values (no-op for fixed scalar).
    pub fn refresh_from_typical(&mut self, tv: &TypicalValues) {
        if let ToleranceStrategy::TypicalValues {
            eta, atol_floor, ..
        } = self.strategy
        {
            self.atol = atol_from_typical(&tv.tv, eta, atol_floor);
        }
    }

    pub fn n_comp(&self) -> usize {
        self.atol.len()
    }

    /// Expand per-component atol to a full batch vector under `layout`.
    pub fn expand_atol(&self, n_cells: usize, layout: Layout) -> Vec<f64> {
        expand_atol(&self.atol, n_cells, layout)
    }
}

pub fn expand_atol(atol: &[f64], n_cells: usize, layout: Layout) -> Vec<f64> {
    let n_comp = atol.len();
    let mut out = vec![0.0; n_cells * n_comp];
    for c in 0..n_cells {
        for (k, &a) in atol.iter().enumerate() {
            let i = match layout {
                Layout::CellMajor => c * n_comp + k,
                Layout::ComponentMajor => k * n_cells + c,
            };
            out[i] = a;
        }
    }
    out
}

/// `atol_i = max(eta * tv_i, floor)`.
pub fn atol_from_typical(tv: &[f64], eta: f64, floor: f64) -> Vec<f64> {
    assert!(eta > 0.0, "eta must be positive");
    assert!(floor > 0.0, "atol floor must be positive");
    tv.iter().map(|&t| (eta * t).max(floor)).collect()
}

//! Error weights and the weighted root-mean-square norm used for all
//! integrator error and correction measurements.

use crate::error::CoreError;
use crate::sum::CompensatedSum;

/// Per-entry reciprocal error scales, `w_i = 1 / (rtol*|y_i| + atol_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorWeights {
    pub w: Vec<f64>,
}

/// Build WRMS weights from the previous accepted solution.
///
/// `atol` must have the same length as `y_prev` (already expanded across a
/// batch if applicable).
pub fn compute_weights(y_prev: &[f64], rtol: f64, atol: &[f64]) -> Result<ErrorWeights, CoreError> {
    if atol.len() != y_prev.len() {
        return Err(CoreError::LengthMismatch {
            expected: y_prev.len(),
            got: atol.len(),
        });
    }
    let mut w = Vec::with_capacity(y_prev.len());
    for (i, (&y, &a)) in y_prev.iter().zip(atol).enumerate() {
        if !y.is_finite() {
            return Err(CoreError::NonFiniteInput(i));
        }
        w.push(1.0 / (rtol * y.abs() + a));
    }
    Ok(ErrorWeights { w })
}

/// `sqrt((1/N) * sum (w_i v_i)^2)`.
pub fn wrms_norm(v: &[f64], w: &ErrorWeights) -> Result<f64, CoreError> {
    if v.len() != w.w.len() {
        return Err(CoreError::LengthMismatch {
            expected: w.w.len(),
            got: v.len(),
        });
    }
    Ok(wrms_norm_raw(v, &w.w))
}

/// Same as [`wrms_norm`] over bare slices; lengths must match.
pub fn wrms_norm_raw(v: &[f64], w: &[f64]) -> f64 {
    debug_assert_eq!(v.len(), w.len());
    if v.is_empty() {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    for (x, wi) in v.iter().zip(w) {
        let t = x * wi;
        acc.add(t * t);
    }
    (acc.value() / v.len() as f64).sqrt()
}

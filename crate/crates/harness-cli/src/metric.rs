//! The sweep error metric: averaged mean squared error of temperature over
//! the interval endpoints, against the tight-tolerance reference.

use crate::error::HarnessError;
use crate::reference::Reference;

/// `(1/K) * sum_k (T_run(t_k) - T_ref(t_k))^2` over the K endpoints.
/// Times must match the reference sample grid exactly.
pub fn error_metric(
    times: &[f64],
    states: &[Vec<f64>],
    reference: &Reference,
    temperature_index: usize,
) -> Result<f64, HarnessError> {
    if times.is_empty() || times.len() != states.len() {
        return Err(HarnessError::GridMismatch);
    }
    let mut acc = 0.0;
    for (t, state) in times.iter().zip(states) {
        let r = reference.state_at(*t).ok_or(HarnessError::GridMismatch)?;
        let diff = state[temperature_index] - r[temperature_index];
        acc += diff * diff;
    }
    Ok(acc / times.len() as f64)
}

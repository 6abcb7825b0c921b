//! Initial step-size estimate from a weighted second-derivative probe: take
//! a small trial Euler step, difference the rhs, and size h so the leading
//! local error term is near unity in the WRMS norm.

use crate::{IntegrateError, OdeProblem};
use lockstep_core::wrms_norm_raw;

/// Estimates h0 given `f0 = f(t0, y0)` (already evaluated). Costs one extra
/// rhs evaluation unless the rhs is identically zero at y0.
///
/// Fallbacks: a vanishing second-derivative estimate with a nonzero rhs
/// gives 0.1 * (t_end - t0); a zero rhs gives min(h_max, t_end - t0) so a
/// quiescent system crosses the interval in one step.
pub fn estimate_h0<P: OdeProblem>(
    problem: &P,
    t0: f64,
    y0: &[f64],
    f0: &[f64],
    t_end: f64,
    h_max: f64,
    weights: &[f64],
) -> Result<(f64, u64), IntegrateError> {
    let tdist = t_end - t0;
    let d0 = wrms_norm_raw(f0, weights);
    if d0 == 0.0 {
        return Ok((h_max.min(tdist), 0));
    }
    // Trial step small enough that the probe stays in the linear regime.
    let h_try = (0.01 / d0).min(0.1 * tdist);
    let mut y1 = vec![0.0; y0.len()];
    for i in 0..y0.len() {
        y1[i] = y0[i] + h_try * f0[i];
    }
    let mut f1 = vec![0.0; y0.len()];
    match problem.rhs(t0 + h_try, &y1, &mut f1) {
        Ok(()) => {}
        Err(e) if e.is_recoverable() => {
            // The probe left the admissible region; fall back conservatively.
            return Ok(((0.01 / d0).min(0.1 * tdist).min(h_max), 0));
        }
        Err(e) => return Err(e),
    }
    for i in 0..f1.len() {
        f1[i] = (f1[i] - f0[i]) / h_try;
    }
    let ydd = wrms_norm_raw(&f1, weights);
    let h0 = if ydd > 0.0 {
        (2.0 / ydd).sqrt()
    } else {
        0.1 * tdist
    };
    Ok((h0.min(0.1 * tdist).min(h_max).max(f64::MIN_POSITIVE), 1))
}

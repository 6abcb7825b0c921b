//! The damped-free Newton iteration shared by both BDF inner solvers. The
//! stopping test couples the latest correction norm with a running estimate
//! R of the convergence rate: stop when R * ||delta_m||_wrms < c_eps * eps,
//! with R <- max(c_r * R, ||delta_m|| / ||delta_{m-1}||).

use crate::IntegrateError;
use lockstep_core::wrms_norm_raw;

#[derive(Debug, Clone)]
pub struct NewtonConfig {
    /// Nonlinear safety factor on the stopping scale.
    pub c_eps: f64,
    /// Rate-memory factor in the R update.
    pub c_r: f64,
    /// Method-dependent stopping constant supplied by the integrator.
    pub eps: f64,
    pub max_iters: usize,
    /// Correction-norm growth ratio above which the iteration is declared
    /// diverging.
    pub divergence_threshold: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            c_eps: 0.1,
            c_r: 0.3,
            eps: 0.1,
            max_iters: 3,
            divergence_threshold: 2.0,
        }
    }
}

impl NewtonConfig {
    /// The stopping threshold c_eps * eps compared against R * ||delta||.
    pub fn threshold(&self) -> f64 {
        self.c_eps * self.eps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub converged: bool,
    pub diverged: bool,
    /// The inner linear solve failed to reach its tolerance.
    pub linear_failed: bool,
    /// Iterations performed (corrections applied).
    pub iters: usize,
    /// Final rate estimate R.
    pub rate: f64,
    /// WRMS norm of the last correction.
    pub last_norm: f64,
}

/// Runs the Newton iteration in place. `y` is the current iterate (entered
/// as the predictor guess) and `d` the accumulated correction relative to
/// it; both are advanced together. `residual` fills `g` with the nonlinear
/// residual at (`y`, `d`); `linear_solve` overwrites `g` with the solution
/// `delta` of the Newton system, returning false when the linear solver did
/// not reach its tolerance.
pub fn newton_solve<Res, Lin>(
    y: &mut [f64],
    d: &mut [f64],
    weights: &[f64],
    cfg: &NewtonConfig,
    g: &mut [f64],
    mut residual: Res,
    mut linear_solve: Lin,
) -> Result<NewtonOutcome, IntegrateError>
where
    Res: FnMut(&[f64], &[f64], &mut [f64]) -> Result<(), IntegrateError>,
    Lin: FnMut(&[f64], &mut [f64]) -> Result<bool, IntegrateError>,
{
    // No rate history at the first iteration.
    let mut rate_est = 1.0;
    let mut prev_norm: Option<f64> = None;
    let threshold = cfg.threshold();
    for m in 1..=cfg.max_iters {
        residual(y, d, g)?;
        let ok = linear_solve(y, g)?;
        if !ok {
            return Ok(NewtonOutcome {
                converged: false,
                diverged: false,
                linear_failed: true,
                iters: m,
                rate: rate_est,
                last_norm: f64::NAN,
            });
        }
        for i in 0..y.len() {
            y[i] += g[i];
            d[i] += g[i];
        }
        let norm = wrms_norm_raw(g, weights);
        if !norm.is_finite() {
            return Err(IntegrateError::NonFiniteState { t: f64::NAN });
        }
        if let Some(p) = prev_norm {
            let ratio = if p > 0.0 { norm / p } else { 0.0 };
            if ratio > cfg.divergence_threshold {
                return Ok(NewtonOutcome {
                    converged: false,
                    diverged: true,
                    linear_failed: false,
                    iters: m,
                    rate: ratio,
                    last_norm: norm,
                });
            }
            rate_est = (cfg.c_r * rate_est).max(ratio);
        }
        if rate_est * norm < threshold {
            return Ok(NewtonOutcome {
                converged: true,
                diverged: false,
                linear_failed: false,
                iters: m,
                rate: rate_est,
                last_norm: norm,
            });
        }
        prev_norm = Some(norm);
    }
    Ok(NewtonOutcome {
        converged: false,
        diverged: false,
        linear_failed: false,
        iters: cfg.max_iters,
        rate: rate_est,
        last_norm: prev_norm.unwrap_or(f64::NAN),
    })
}

//! Adaptive explicit Runge-Kutta integration with an embedded 4(3) pair and
//! the same WRMS acceptance test and step controller as the BDF path.

use std::time::Instant;

use crate::controller::{rejection_factor, step_factor, ControllerConfig};
use crate::problem::{OdeProblem, SingleCell};
use crate::{estimate_h0, IntegrateError};
use lockstep_core::{wrms_norm_raw, IntegratorStats, ToleranceSpec, VectorPool};
use lockstep_models::OdeSystem;

/// Coefficients of an embedded explicit pair: a 4th-order propagating
/// solution with an embedded 3rd-order error estimator.
#[derive(Debug, Clone)]
pub struct ErkTableau {
    pub stages: usize,
    pub c: &'static [f64],
    /// Strictly lower-triangular rows; row i holds i entries.
    pub a: &'static [&'static [f64]],
    pub b: &'static [f64],
    pub b_embedded: &'static [f64],
    pub order: usize,
    pub embedded_order: usize,
}

/// Zonneveld's 4(3) pair, five stages. Pinned by tests.
pub const ZONNEVELD_43: ErkTableau = ErkTableau {
    stages: 5,
    c: &[0.0, 0.5, 0.5, 1.0, 0.75],
    a: &[
        &[],
        &[0.5],
        &[0.0, 0.5],
        &[0.0, 0.0, 1.0],
        &[5.0 / 32.0, 7.0 / 32.0, 13.0 / 32.0, -1.0 / 32.0],
    ],
    b: &[1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0, 0.0],
    b_embedded: &[-0.5, 7.0 / 3.0, 7.0 / 3.0, 13.0 / 6.0, -16.0 / 3.0],
    order: 4,
    embedded_order: 3,
};

#[derive(Debug, Clone)]
pub struct ErkOptions {
    pub max_steps: u64,
    pub h_max: f64,
    pub deadline: Option<Instant>,
    pub fixed_h: Option<f64>,
    pub controller: ControllerConfig,
    pub h_min_frac: f64,
}

impl Default for ErkOptions {
    fn default() -> Self {
        ErkOptions {
            max_steps: 5_000_000,
            h_max: f64::INFINITY,
            deadline: None,
            fixed_h: None,
            controller: ControllerConfig::default(),
            h_min_frac: 1e-30,
        }
    }
}

pub fn integrate_erk(
    system: &dyn OdeSystem,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    tol: &ToleranceSpec,
    opts: &ErkOptions,
    pool: &mut VectorPool,
) -> Result<(Vec<f64>, IntegratorStats), IntegrateError> {
    let problem = SingleCell::new(system);
    integrate_erk_problem(&problem, y0, t0, t_end, tol.rtol, &tol.atol, opts, pool)
}

#[allow(clippy::too_many_arguments)]
pub fn integrate_erk_problem<P: OdeProblem>(
    problem: &P,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    rtol: f64,
    atol: &[f64],
    opts: &ErkOptions,
    pool: &mut VectorPool,
) -> Result<(Vec<f64>, IntegratorStats), IntegrateError> {
    let tab = &ZONNEVELD_43;
    let n = problem.n_dof();
    if y0.len() != n || atol.len() != n {
        return Err(IntegrateError::InvalidConfig(format!(
            "state/atol length mismatch: dof {n}, y0 {}, atol {}",
            y0.len(),
            atol.len()
        )));
    }
    if !(t_end > t0) {
        return Err(IntegrateError::InvalidConfig(
            "t_end must exceed t0".to_string(),
        ));
    }
    let tdist = t_end - t0;
    let h_min = opts.h_min_frac * tdist;
    let h_max_eff = opts.h_max.min(tdist);
    let mut stats = IntegratorStats::default();

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut weights = pool.acquire(n);
    let mut k: Vec<Vec<f64>> = (0..tab.stages).map(|_| pool.acquire(n)).collect();
    let mut y_stage = pool.acquire(n);
    let mut y_new = pool.acquire(n);
    let mut lte = pool.acquire(n);

    let result: Result<(), IntegrateError> = (|| {
        update_weights(&mut weights, &y, rtol, atol);
        problem.rhs(t0, &y, &mut k[0])?;
        stats.n_rhs_evals += 1;
        let mut h = match opts.fixed_h {
            Some(hf) => hf,
            None => {
                let (h0, extra) = estimate_h0(problem, t0, &y, &k[0], t_end, h_max_eff, &weights)?;
                stats.n_rhs_evals += extra;
                h0.clamp(h_min.max(f64::MIN_POSITIVE), h_max_eff)
            }
        };

        let time_tiny = 4.0 * f64::EPSILON * t0.abs().max(t_end.abs()).max(tdist);
        let mut consec_err_fails: u32 = 0;
        let mut first_adaptation = true;
        while t < t_end - time_tiny {
            if stats.n_steps >= opts.max_steps {
                return Err(IntegrateError::TooMuchWork {
                    t,
                    n_steps: stats.n_steps,
                });
            }
            if let Some(deadline) = opts.deadline {
                if Instant::now() >= deadline {
                    return Err(IntegrateError::DeadlineExceeded { t });
                }
            }
            h = h.min(t_end - t);
            let t_new = t + h;
            update_weights(&mut weights, &y, rtol, atol);

            // All stages are evaluated per attempt (no reuse across
            // rejections), so n_rhs = stages * attempts.
            let mut stage_failed = false;
            for s in 0..tab.stages {
                if s == 0 {
                    y_stage.copy_from_slice(&y);
                } else {
                    y_stage.copy_from_slice(&y);
                    for (j, &aij) in tab.a[s].iter().enumerate() {
                        if aij != 0.0 {
                            for i in 0..n {
                                y_stage[i] += h * aij * k[j][i];
                            }
                        }
                    }
                }
                stats.n_rhs_evals += 1;
                match problem.rhs(t + tab.c[s] * h, &y_stage, &mut k[s]) {
                    Ok(()) => {}
                    Err(e) if e.is_recoverable() => {
                        stage_failed = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            if stage_failed {
                stats.n_err_test_fails += 1;
                consec_err_fails += 1;
                let h_new = (h * 0.25).max(h_min);
                if h_new >= h {
                    return Err(IntegrateError::StepTooSmall { t, h });
                }
                h = h_new;
                continue;
            }

            y_new.copy_from_slice(&y);
            lte.fill(0.0);
            for s in 0..tab.stages {
                let bs = tab.b[s];
                let es = tab.b[s] - tab.b_embedded[s];
                for i in 0..n {
                    y_new[i] += h * bs * k[s][i];
                    lte[i] += h * es * k[s][i];
                }
            }
            if y_new.iter().any(|v| !v.is_finite()) {
                stats.n_err_test_fails += 1;
                consec_err_fails += 1;
                let h_new = (h * 0.25).max(h_min);
                if h_new >= h {
                    return Err(IntegrateError::StepTooSmall { t, h });
                }
                h = h_new;
                continue;
            }

            let err_norm = wrms_norm_raw(&lte, &weights);
            if opts.fixed_h.is_none() && !(err_norm < 1.0) {
                stats.n_err_test_fails += 1;
                consec_err_fails += 1;
                let factor = rejection_factor(err_norm, tab.order, &opts.controller, consec_err_fails);
                let h_new = (h * factor).max(h_min);
                if h_new >= h {
                    return Err(IntegrateError::StepTooSmall { t, h });
                }
                h = h_new;
                continue;
            }

            // Accept.
            consec_err_fails = 0;
            stats.n_steps += 1;
            t = t_new;
            std::mem::swap(&mut y, &mut y_new);
            if opts.fixed_h.is_none() {
                let factor = step_factor(err_norm, tab.order, &opts.controller, first_adaptation);
                first_adaptation = false;
                h = (h * factor).clamp(h_min, h_max_eff);
            }
        }
        Ok(())
    })();

    let y_final = y;
    pool.release(weights)
        .map_err(|e| IntegrateError::InvalidConfig(e.to_string()))?;
    for buf in k {
        pool.release(buf)
            .map_err(|e| IntegrateError::InvalidConfig(e.to_string()))?;
    }
    for buf in [y_stage, y_new, lte] {
        pool.release(buf)
            .map_err(|e| IntegrateError::InvalidConfig(e.to_string()))?;
    }
    result?;
    Ok((y_final, stats))
}

fn update_weights(w: &mut [f64], y: &[f64], rtol: f64, atol: &[f64]) {
    for i in 0..w.len() {
        w[i] = 1.0 / (rtol * y[i].abs() + atol[i]);
    }
}

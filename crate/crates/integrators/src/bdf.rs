//! Variable-step, variable-order BDF (orders 1-5) over backward-difference
//! history rows, with quasi-constant step control: the step and order only
//! change after enough equal steps have accumulated to make the higher and
//! lower order error estimates trustworthy. Inner nonlinear solves are
//! either modified Newton over a factored block-diagonal Newton matrix or
//! inexact Newton with scaled matrix-free GMRES.

use std::cell::{Cell, RefCell};
use std::time::Instant;

use crate::controller::{rejection_factor, select_order_and_factor, step_factor, ControllerConfig};
use crate::newton::{newton_solve, NewtonConfig};
use crate::problem::{JacobianKind, OdeProblem, SingleCell, SolverChoice};
use crate::refresh::{refresh_policy, RefreshConfig, RefreshDecision, RefreshState};
use crate::{estimate_h0, IntegrateError};
use lockstep_core::{
    fused_linear_combination, wrms_norm_raw, CellBlock, IntegratorStats, Layout, ToleranceSpec,
    VectorPool,
};
use lockstep_linalg::{
    fd_jacobian_batched, gmres_scaled, jv_product, lu_factor_batched, lu_solve_flat,
    BlockDiagMatrix, GmresConfig, LinalgError, ScalingOperators,
};
use lockstep_models::OdeSystem;

pub const MAX_ORDER: usize = 5;
const HISTORY_ROWS: usize = MAX_ORDER + 3;

#[derive(Debug, Clone)]
pub struct BdfOptions {
    pub max_steps: u64,
    pub h_max: f64,
    pub deadline: Option<Instant>,
    /// Pin the step size (disables the controller entirely).
    pub fixed_h: Option<f64>,
    /// Pin the order. Orders above 1 assume the caller seeds the history.
    pub fixed_order: Option<usize>,
    /// Skip the local error test (convergence studies with pinned h).
    pub disable_error_test: bool,
    pub newton: NewtonConfig,
    pub controller: ControllerConfig,
    pub refresh: RefreshConfig,
    pub gmres_max_iters: usize,
    pub gmres_c_l: f64,
    /// h_min as a fraction of the interval length.
    pub h_min_frac: f64,
    /// Consecutive nonlinear convergence failures tolerated before aborting.
    pub max_conv_fails: u32,
}

impl Default for BdfOptions {
    fn default() -> Self {
        BdfOptions {
            max_steps: 500_000,
            h_max: f64::INFINITY,
            deadline: None,
            fixed_h: None,
            fixed_order: None,
            disable_error_test: false,
            newton: NewtonConfig::default(),
            controller: ControllerConfig::default(),
            refresh: RefreshConfig::default(),
            gmres_max_iters: 30,
            gmres_c_l: 0.05,
            h_min_frac: 1e-30,
            max_conv_fails: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BdfResult {
    pub y: Vec<f64>,
    pub stats: IntegratorStats,
    pub final_order: usize,
    pub max_order_reached: usize,
    pub final_h: f64,
}

/// `r[i][j]` of the history rescale matrix for a step-ratio change.
fn compute_r(order: usize, factor: f64) -> Vec<f64> {
    let m = order + 1;
    let mut step = vec![0.0; m * m];
    for j in 0..m {
        step[j] = 1.0;
    }
    for i in 1..m {
        for j in 0..m {
            step[i * m + j] = (i as f64 - 1.0 - factor * j as f64) / i as f64;
        }
    }
    let mut r = step.clone();
    for i in 1..m {
        for j in 0..m {
            r[i * m + j] = r[(i - 1) * m + j] * step[i * m + j];
        }
    }
    r
}

/// Rescales the first `order + 1` history rows for a step ratio `factor`.
fn change_history(d: &mut [Vec<f64>], order: usize, factor: f64) {
    let m = order + 1;
    let r = compute_r(order, factor);
    let u = compute_r(order, 1.0);
    let mut ru = vec![0.0; m * m];
    for i in 0..m {
        for k in 0..m {
            let rik = r[i * m + k];
            if rik != 0.0 {
                for j in 0..m {
                    ru[i * m + j] += rik * u[k * m + j];
                }
            }
        }
    }
    let n = d[0].len();
    let mut out = vec![vec![0.0; n]; m];
    for (j, row) in out.iter_mut().enumerate() {
        for i in 0..m {
            let coef = ru[i * m + j];
            if coef != 0.0 {
                for k in 0..n {
                    row[k] += coef * d[i][k];
                }
            }
        }
    }
    for (j, row) in out.into_iter().enumerate() {
        d[j] = row;
    }
}

fn update_weights(w: &mut [f64], y: &[f64], rtol: f64, atol: &[f64]) {
    for i in 0..w.len() {
        w[i] = 1.0 / (rtol * y[i].abs() + atol[i]);
    }
}

struct Counters {
    rhs: Cell<u64>,
    lin: Cell<u64>,
}

/// Maps a problem rhs through the linalg error type while stashing any real
/// failure so recoverability survives the round trip.
fn stash_rhs<'a, P: OdeProblem>(
    problem: &'a P,
    t: f64,
    counters: &'a Counters,
    stash: &'a RefCell<Option<IntegrateError>>,
) -> impl FnMut(&[f64], &mut [f64]) -> Result<(), LinalgError> + 'a {
    move |y, out| {
        counters.rhs.set(counters.rhs.get() + 1);
        problem.rhs(t, y, out).map_err(|e| {
            let msg = e.to_string();
            *stash.borrow_mut() = Some(e);
            LinalgError::RhsFailure(msg)
        })
    }
}

fn unstash(e: LinalgError, stash: &RefCell<Option<IntegrateError>>) -> IntegrateError {
    stash.borrow_mut().take().unwrap_or(IntegrateError::Linalg(e))
}

pub fn integrate_bdf_problem<P: OdeProblem>(
    problem: &P,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    rtol: f64,
    atol: &[f64],
    solver: SolverChoice,
    opts: &BdfOptions,
    pool: &mut VectorPool,
) -> Result<BdfResult, IntegrateError> {
    integrate_bdf_with_history(problem, y0, t0, t_end, rtol, atol, solver, opts, pool, None)
}

/// Single-cell convenience wrapper with zero external forcing.
pub fn integrate_bdf(
    system: &dyn OdeSystem,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    tol: &ToleranceSpec,
    solver: SolverChoice,
    opts: &BdfOptions,
    pool: &mut VectorPool,
) -> Result<BdfResult, IntegrateError> {
    let problem = SingleCell::new(system);
    integrate_bdf_problem(&problem, y0, t0, t_end, tol.rtol, &tol.atol, solver, opts, pool)
}

/// As `integrate_bdf_problem`, optionally seeding the multistep history from
/// a known solution `exact(t, out)` so a pinned order is exercised from the
/// first step (convergence studies).
#[allow(clippy::too_many_arguments)]
pub fn integrate_bdf_with_history<P: OdeProblem>(
    problem: &P,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    rtol: f64,
    atol: &[f64],
    solver: SolverChoice,
    opts: &BdfOptions,
    pool: &mut VectorPool,
    exact: Option<&dyn Fn(f64, &mut [f64])>,
) -> Result<BdfResult, IntegrateError> {
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
    if !(rtol > 0.0) || atol.iter().any(|a| !(*a > 0.0)) {
        return Err(IntegrateError::InvalidConfig(
            "tolerances must be positive".to_string(),
        ));
    }
    if let Some(i) = y0.iter().position(|v| !v.is_finite()) {
        return Err(IntegrateError::InvalidConfig(format!(
            "y0[{i}] is not finite"
        )));
    }
    let (direct, jac_kind) = match solver {
        SolverChoice::InexactNewtonGmres => (false, JacobianKind::Numerical),
        SolverChoice::ModifiedNewtonDirect(k) => (true, k),
    };
    if direct && jac_kind == JacobianKind::Analytic && !problem.has_analytic_jacobian() {
        return Err(IntegrateError::JacobianNotProvided);
    }

    // gamma[k] = sum_{j=1..k} 1/j; alpha = gamma (pure BDF); the LTE constant
    // of order q is 1/(q+1).
    let mut gamma = [0.0; MAX_ORDER + 2];
    for k in 1..=MAX_ORDER + 1 {
        gamma[k] = gamma[k - 1] + 1.0 / k as f64;
    }
    let error_const: Vec<f64> = (0..=MAX_ORDER + 1).map(|k| 1.0 / (k as f64 + 1.0)).collect();

    let tdist = t_end - t0;
    let h_min = opts.h_min_frac * tdist;
    let h_max_eff = opts.h_max.min(tdist);
    let stats_shell = IntegratorStats::default();
    let counters = Counters {
        rhs: Cell::new(0),
        lin: Cell::new(0),
    };
    let mut n_steps: u64 = 0;
    let mut n_newton: u64 = 0;
    let mut n_jac: u64 = 0;
    let mut n_err_fail: u64 = 0;
    let mut n_conv_fail: u64 = 0;

    let mut t = t0;
    let mut f0 = pool.acquire(n);
    {
        counters.rhs.set(counters.rhs.get() + 1);
        problem.rhs(t0, y0, &mut f0)?;
    }

    let mut weights = pool.acquire(n);
    update_weights(&mut weights, y0, rtol, atol);

    let mut h = match opts.fixed_h {
        Some(hf) => hf,
        None => {
            let (h0, extra) = estimate_h0(problem, t0, y0, &f0, t_end, h_max_eff, &weights)?;
            counters.rhs.set(counters.rhs.get() + extra);
            h0.clamp(h_min.max(f64::MIN_POSITIVE), h_max_eff)
        }
    };

    let mut q = opts.fixed_order.unwrap_or(1).clamp(1, MAX_ORDER);
    let mut max_order_reached = q;
    let mut d_hist: Vec<Vec<f64>> = (0..HISTORY_ROWS).map(|_| vec![0.0; n]).collect();
    if let Some(exact_fn) = exact {
        // Backward differences on the grid t0, t0-h, ..., t0-q*h.
        let mut samples: Vec<Vec<f64>> = Vec::with_capacity(q + 1);
        for i in 0..=q {
            let mut yi = vec![0.0; n];
            exact_fn(t0 - i as f64 * h, &mut yi);
            samples.push(yi);
        }
        for j in 0..=q {
            let mut binom = 1.0f64;
            for (i, s) in samples.iter().enumerate().take(j + 1) {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                for k in 0..n {
                    d_hist[j][k] += sign * binom * s[k];
                }
                binom = binom * (j as f64 - i as f64) / (i as f64 + 1.0);
            }
        }
    } else {
        d_hist[0].copy_from_slice(y0);
        for k in 0..n {
            d_hist[1][k] = h * f0[k];
        }
    }
    pool.release(f0).map_err(|e| IntegrateError::InvalidConfig(e.to_string()))?;

    // Direct-solver state.
    let n_cells = problem.n_cells();
    let n_comp = problem.n_comp();
    let mut jac = BlockDiagMatrix::zeros(n_cells, n_comp);
    let mut newton_mat = BlockDiagMatrix::zeros(n_cells, n_comp);
    let mut have_jac = false;
    let mut refresh_state = RefreshState {
        jacobian_age: 0,
        gamma_j: f64::NAN,
        prev_failed: false,
    };
    let mut c_factored = f64::NAN;

    let mut n_equal_steps: usize = 0;
    let mut consec_err_fails: u32 = 0;
    let mut consec_conv_fails: u32 = 0;
    let mut first_adaptation = true;

    let f_buf = RefCell::new(vec![0.0; n]);
    let stash: RefCell<Option<IntegrateError>> = RefCell::new(None);
    let mut y_pred = pool.acquire(n);
    let mut psi = pool.acquire(n);
    let mut d_corr = pool.acquire(n);
    let mut y_new = pool.acquire(n);
    let mut g_buf = pool.acquire(n);

    let time_tiny = 4.0 * f64::EPSILON * t0.abs().max(t_end.abs()).max(tdist);
    let result: Result<(), IntegrateError> = (|| {
        'steps: while t < t_end - time_tiny {
            if n_steps >= opts.max_steps {
                return Err(IntegrateError::TooMuchWork { t, n_steps });
            }
            if let Some(deadline) = opts.deadline {
                if Instant::now() >= deadline {
                    return Err(IntegrateError::DeadlineExceeded { t });
                }
            }
            // Clamp to the interval end; rescale the history on any change.
            let remaining = t_end - t;
            if h > remaining {
                change_history(&mut d_hist, q, remaining / h);
                h = remaining;
                n_equal_steps = 0;
            }

            let t_new = t + h;
            update_weights(&mut weights, &d_hist[0], rtol, atol);

            // Predictor and corrector coefficients from the history rows.
            {
                let rows: Vec<&[f64]> = d_hist[..=q].iter().map(|r| r.as_slice()).collect();
                let ones = vec![1.0; q + 1];
                fused_linear_combination(&ones, &rows, &mut y_pred)
                    .map_err(|e| IntegrateError::InvalidConfig(e.to_string()))?;
                let coeffs: Vec<f64> = (1..=q).map(|j| gamma[j] / gamma[q]).collect();
                let rows: Vec<&[f64]> = d_hist[1..=q].iter().map(|r| r.as_slice()).collect();
                fused_linear_combination(&coeffs, &rows, &mut psi)
                    .map_err(|e| IntegrateError::InvalidConfig(e.to_string()))?;
            }
            let c = h / gamma[q];

            // Modified Newton: decide whether the Jacobian survives.
            let mut attempt_failed_recoverably = false;
            let mut jac_fresh = false;
            if direct {
                let decision = if !have_jac {
                    RefreshDecision::RebuildJacobian
                } else {
                    refresh_policy(&refresh_state, c, &opts.refresh)
                };
                if decision == RefreshDecision::RebuildJacobian {
                    match build_jacobian(
                        problem, t_new, &y_pred, &weights, jac_kind, &counters, &stash, &f_buf,
                        &mut jac,
                    ) {
                        Ok(()) => {
                            n_jac += 1;
                            have_jac = true;
                            jac_fresh = true;
                            refresh_state.jacobian_age = 0;
                            refresh_state.gamma_j = c;
                            c_factored = f64::NAN;
                        }
                        Err(e) if e.is_recoverable() => attempt_failed_recoverably = true,
                        Err(e) => return Err(e),
                    }
                }
                if !attempt_failed_recoverably && c_factored != c {
                    build_newton_matrix(&jac, c, &mut newton_mat);
                    match lu_factor_batched(&mut newton_mat) {
                        Ok(()) => c_factored = c,
                        Err(LinalgError::SingularBlock(_)) => attempt_failed_recoverably = true,
                        Err(e) => return Err(e.into()),
                    }
                }
            }

            let mut converged = false;
            let mut newton_gave_up = false;
            while !attempt_failed_recoverably && !newton_gave_up {
                y_new.copy_from_slice(&y_pred);
                d_corr.fill(0.0);
                let eps_newton = opts.newton.threshold() * (n as f64).sqrt();
                let outcome = {
                    let residual = |y: &[f64], d: &[f64], g: &mut [f64]| {
                        counters.rhs.set(counters.rhs.get() + 1);
                        let mut fb = f_buf.borrow_mut();
                        problem.rhs(t_new, y, &mut fb)?;
                        for i in 0..g.len() {
                            g[i] = c * fb[i] - psi[i] - d[i];
                        }
                        Ok(())
                    };
                    if direct {
                        let mat = &newton_mat;
                        let lin = &counters.lin;
                        newton_solve(
                            &mut y_new,
                            &mut d_corr,
                            &weights,
                            &opts.newton,
                            &mut g_buf,
                            residual,
                            |_y, g: &mut [f64]| {
                                lin.set(lin.get() + 1);
                                match lu_solve_flat(mat, g) {
                                    Ok(()) => Ok(true),
                                    Err(_) => Ok(false),
                                }
                            },
                        )
                    } else {
                        let gmres_cfg = GmresConfig {
                            max_iters: opts.gmres_max_iters,
                            max_restarts: 0,
                            c_l: opts.gmres_c_l,
                            eps_newton,
                            record_iterates: false,
                        };
                        newton_solve(
                            &mut y_new,
                            &mut d_corr,
                            &weights,
                            &opts.newton,
                            &mut g_buf,
                            residual,
                            |y_iter: &[f64], g: &mut [f64]| {
                                let fb = f_buf.borrow();
                                let apply = |v: &[f64], out: &mut [f64]| {
                                    let mut rhs =
                                        stash_rhs(problem, t_new, &counters, &stash);
                                    jv_product(&mut rhs, y_iter, &fb, v, &weights, out)?;
                                    for i in 0..out.len() {
                                        out[i] = v[i] - c * out[i];
                                    }
                                    Ok(())
                                };
                                let scaling = ScalingOperators::from_weights(&weights);
                                let res = gmres_scaled(apply, g, &scaling, &gmres_cfg)
                                    .map_err(|e| unstash(e, &stash))?;
                                counters.lin.set(counters.lin.get() + res.iters as u64);
                                g.copy_from_slice(&res.x);
                                Ok(res.converged)
                            },
                        )
                    }
                };
                match outcome {
                    Ok(o) => {
                        n_newton += o.iters as u64;
                        if o.converged && y_new.iter().all(|v| v.is_finite()) {
                            converged = true;
                            break;
                        }
                        if direct && !jac_fresh {
                            // Retry the same step with a fresh Jacobian.
                            match build_jacobian(
                                problem, t_new, &y_pred, &weights, jac_kind, &counters, &stash,
                                &f_buf, &mut jac,
                            ) {
                                Ok(()) => {
                                    n_jac += 1;
                                    jac_fresh = true;
                                    refresh_state.jacobian_age = 0;
                                    refresh_state.gamma_j = c;
                                    build_newton_matrix(&jac, c, &mut newton_mat);
                                    match lu_factor_batched(&mut newton_mat) {
                                        Ok(()) => c_factored = c,
                                        Err(_) => newton_gave_up = true,
                                    }
                                }
                                Err(e) if e.is_recoverable() => newton_gave_up = true,
                                Err(e) => return Err(e),
                            }
                        } else {
                            newton_gave_up = true;
                        }
                    }
                    Err(e) if e.is_recoverable() => {
                        newton_gave_up = true;
                    }
                    Err(e) => return Err(e),
                }
            }

            if !converged {
                n_conv_fail += 1;
                consec_conv_fails += 1;
                refresh_state.prev_failed = true;
                if consec_conv_fails >= opts.max_conv_fails {
                    return Err(IntegrateError::RepeatedConvergenceFailure { t });
                }
                let h_new = (h * 0.25).max(h_min);
                if h_new >= h {
                    return Err(IntegrateError::StepTooSmall { t, h });
                }
                change_history(&mut d_hist, q, h_new / h);
                h = h_new;
                n_equal_steps = 0;
                continue 'steps;
            }
            consec_conv_fails = 0;
            refresh_state.prev_failed = false;

            // Local error test in the WRMS norm of the previous state's
            // weights: accept iff ||LTE|| < 1.
            let err_norm = error_const[q] * wrms_norm_raw(&d_corr, &weights);
            if !opts.disable_error_test && !(err_norm < 1.0) {
                n_err_fail += 1;
                consec_err_fails += 1;
                let factor = if consec_err_fails >= 3 {
                    q = 1;
                    0.1
                } else {
                    rejection_factor(err_norm, q, &opts.controller, consec_err_fails)
                };
                let h_new = (h * factor).max(h_min);
                if h_new >= h {
                    return Err(IntegrateError::StepTooSmall { t, h });
                }
                change_history(&mut d_hist, q, h_new / h);
                h = h_new;
                n_equal_steps = 0;
                continue 'steps;
            }
            consec_err_fails = 0;

            // Accept: fold the correction into the difference history.
            n_steps += 1;
            n_equal_steps += 1;
            if direct {
                refresh_state.jacobian_age += 1;
            }
            t = t_new;
            debug_assert!(opts.disable_error_test || err_norm < 1.0);
            for k in 0..n {
                d_hist[q + 2][k] = d_corr[k] - d_hist[q + 1][k];
            }
            d_hist[q + 1].copy_from_slice(&d_corr);
            for i in (0..=q).rev() {
                let (head, tail) = d_hist.split_at_mut(i + 1);
                for k in 0..n {
                    head[i][k] += tail[0][k];
                }
            }

            // Quasi-constant step control: adapt only after q+1 equal steps.
            if opts.fixed_h.is_none() && n_equal_steps >= q + 1 && t < t_end - time_tiny {
                let factor;
                if opts.fixed_order.is_none() {
                    let err_lower = if q > 1 {
                        error_const[q - 1] * wrms_norm_raw(&d_hist[q], &weights)
                    } else {
                        f64::INFINITY
                    };
                    let err_higher = if q < MAX_ORDER {
                        error_const[q + 1] * wrms_norm_raw(&d_hist[q + 2], &weights)
                    } else {
                        f64::INFINITY
                    };
                    let choice = select_order_and_factor(
                        q,
                        err_lower,
                        err_norm,
                        err_higher,
                        &opts.controller,
                        first_adaptation,
                    );
                    q = choice.order;
                    max_order_reached = max_order_reached.max(q);
                    factor = choice.factor;
                } else {
                    factor = step_factor(err_norm, q, &opts.controller, first_adaptation);
                }
                first_adaptation = false;
                let h_new = (h * factor).clamp(h_min, h_max_eff);
                if h_new != h {
                    change_history(&mut d_hist, q, h_new / h);
                    h = h_new;
                    n_equal_steps = 0;
                }
            }
        }
        Ok(())
    })();

    let y_final = d_hist[0].clone();
    for buf in [y_pred, psi, d_corr, y_new, g_buf, weights] {
        pool.release(buf)
            .map_err(|e| IntegrateError::InvalidConfig(e.to_string()))?;
    }
    result?;

    let mut stats = stats_shell;
    stats.n_steps = n_steps;
    stats.n_rhs_evals = counters.rhs.get();
    stats.n_newton_iters = n_newton;
    stats.n_lin_iters = counters.lin.get();
    stats.n_jac_evals = n_jac;
    stats.n_err_test_fails = n_err_fail;
    stats.n_conv_fails = n_conv_fail;
    Ok(BdfResult {
        y: y_final,
        stats,
        final_order: q,
        max_order_reached,
        final_h: h,
    })
}

fn build_newton_matrix(jac: &BlockDiagMatrix, c: f64, m: &mut BlockDiagMatrix) {
    m.reset();
    let n = jac.n_comp;
    for (dst, src) in m.blocks.iter_mut().zip(&jac.blocks) {
        *dst = -c * src;
    }
    for cell in 0..jac.n_cells {
        let blk = m.block_mut(cell);
        for k in 0..n {
            blk[k * n + k] += 1.0;
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn build_jacobian<P: OdeProblem>(
    problem: &P,
    t: f64,
    y: &[f64],
    weights: &[f64],
    kind: JacobianKind,
    counters: &Counters,
    stash: &RefCell<Option<IntegrateError>>,
    f_buf: &RefCell<Vec<f64>>,
    jac: &mut BlockDiagMatrix,
) -> Result<(), IntegrateError> {
    match kind {
        JacobianKind::Analytic => problem.analytic_block_jacobian(t, y, jac),
        JacobianKind::Numerical => {
            {
                counters.rhs.set(counters.rhs.get() + 1);
                let mut fb = f_buf.borrow_mut();
                problem.rhs(t, y, &mut fb)?;
            }
            let block = CellBlock::from_data(
                problem.n_cells(),
                problem.n_comp(),
                Layout::CellMajor,
                y.to_vec(),
            )
            .map_err(|e| IntegrateError::InvalidConfig(e.to_string()))?;
            let fb = f_buf.borrow();
            let mut rhs = stash_rhs(problem, t, counters, stash);
            match fd_jacobian_batched(&mut rhs, &block, &fb, weights) {
                Ok(j) => {
                    *jac = j;
                    Ok(())
                }
                Err(e) => Err(unstash(e, stash)),
            }
        }
    }
}

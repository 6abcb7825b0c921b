//! Scaled matrix-free GMRES with modified-Gram-Schmidt Arnoldi. The residual
//! norm is tracked from the Givens rotations applied to the Hessenberg
//! columns, so no explicit residual vector is formed during the iteration.

use crate::{LinalgError, ScalingOperators};
use lockstep_core::dot;

#[derive(Debug, Clone)]
pub struct GmresConfig {
    /// Krylov dimension cap per cycle.
    pub max_iters: usize,
    /// Extra restart cycles after the first (0 means a single cycle).
    pub max_restarts: usize,
    /// Linear tolerance safety factor applied to the nonlinear scale.
    pub c_l: f64,
    /// The nonlinear stopping scale this solve inherits (c_eps * eps, with
    /// any norm-dimension factor already folded in by the caller).
    pub eps_newton: f64,
    /// Record the tilde-space iterate after every Arnoldi step (test
    /// instrumentation; costs one small triangular solve per iteration).
    pub record_iterates: bool,
}

impl GmresConfig {
    pub fn new(eps_newton: f64) -> GmresConfig {
        GmresConfig {
            max_iters: 30,
            max_restarts: 0,
            c_l: 0.05,
            eps_newton,
            record_iterates: false,
        }
    }

    /// Scaled-residual 2-norm target.
    pub fn tol(&self) -> f64 {
        self.c_l * self.eps_newton
    }
}

#[derive(Debug, Clone)]
pub struct GmresResult {
    /// Back-transformed solution in original variables.
    pub x: Vec<f64>,
    /// Total Arnoldi iterations across all cycles.
    pub iters: usize,
    /// Rotation-tracked scaled residual 2-norm at exit.
    pub final_residual: f64,
    /// Tolerance met (includes exact-solution breakdown).
    pub converged: bool,
    /// Happy breakdown: the Krylov space became invariant, solution exact.
    pub breakdown: bool,
    /// Tracked residual after each iteration.
    pub residual_history: Vec<f64>,
    /// Tilde-space iterates per iteration when requested.
    pub iterates_tilde: Option<Vec<Vec<f64>>>,
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Solves `A x = b` through the diagonally scaled, preconditioned transform,
/// starting from `x = 0` (the Newton-correction convention). `apply_a`
/// computes `out = A v` in original variables.
pub fn gmres_scaled<F>(
    mut apply_a: F,
    b: &[f64],
    scaling: &ScalingOperators,
    cfg: &GmresConfig,
) -> Result<GmresResult, LinalgError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), LinalgError>,
{
    let n = b.len();
    if let Some(i) = b.iter().position(|v| !v.is_finite()) {
        return Err(LinalgError::NonFiniteInput(i));
    }
    let tol = cfg.tol();

    // b~ = S1 P1^-1 b
    let mut b_tilde = b.to_vec();
    scaling.apply_p1_inv(&mut b_tilde);
    scaling.apply_s1(&mut b_tilde);

    // Applies the transformed operator: v -> S1 P1^-1 A P2^-1 S2^-1 v.
    let mut tmp = vec![0.0; n];
    let mut apply_tilde = |v: &[f64], out: &mut [f64]| -> Result<(), LinalgError> {
        tmp.copy_from_slice(v);
        scaling.apply_s2_inv(&mut tmp);
        scaling.apply_p2_inv(&mut tmp);
        apply_a(&tmp, out)?;
        scaling.apply_p1_inv(out);
        scaling.apply_s1(out);
        Ok(())
    };

    let mut x_tilde = vec![0.0; n];
    let mut total_iters = 0usize;
    let mut residual_history = Vec::new();
    let mut iterates = cfg.record_iterates.then(Vec::new);
    let mut converged = false;
    let mut breakdown = false;
    let mut final_residual = norm2(&b_tilde);

    'cycles: for cycle in 0..=cfg.max_restarts {
        // Residual of the current tilde iterate (b~ at cycle 0, x~ = 0).
        let mut r = b_tilde.clone();
        if cycle > 0 {
            let mut ax = vec![0.0; n];
            apply_tilde(&x_tilde, &mut ax)?;
            for i in 0..n {
                r[i] -= ax[i];
            }
        }
        let beta = norm2(&r);
        final_residual = beta;
        if beta <= tol {
            converged = true;
            break;
        }
        for v in r.iter_mut() {
            *v /= beta;
        }
        let mut basis: Vec<Vec<f64>> = vec![r];
        // Hessenberg columns after the Givens rotations, plus the rotation
        // pairs and the rotated rhs g of the small least-squares problem.
        let mut h_cols: Vec<Vec<f64>> = Vec::new();
        let mut givens: Vec<(f64, f64)> = Vec::new();
        let mut g = vec![beta];
        let mut k_used = 0usize;

        for k in 0..cfg.max_iters {
            let mut w = vec![0.0; n];
            apply_tilde(&basis[k], &mut w)?;
            let mut col = vec![0.0; k + 2];
            for (i, v) in basis.iter().enumerate() {
                let hik = dot(&w, v);
                col[i] = hik;
                for j in 0..n {
                    w[j] -= hik * v[j];
                }
            }
            let h_next = norm2(&w);
            col[k + 1] = h_next;
            // Previously computed rotations applied to the new column.
            for (i, &(c, s)) in givens.iter().enumerate() {
                let a = col[i];
                let b2 = col[i + 1];
                col[i] = c * a + s * b2;
                col[i + 1] = -s * a + c * b2;
            }
            // New rotation annihilating the subdiagonal entry.
            let (c, s) = {
                let a = col[k];
                let b2 = col[k + 1];
                let r2 = (a * a + b2 * b2).sqrt();
                if r2 == 0.0 {
                    (1.0, 0.0)
                } else {
                    (a / r2, b2 / r2)
                }
            };
            let a = col[k];
            let b2 = col[k + 1];
            col[k] = c * a + s * b2;
            col[k + 1] = -s * a + c * b2;
            givens.push((c, s));
            let gk = g[k];
            g[k] = c * gk;
            g.push(-s * gk);
            h_cols.push(col);
            total_iters += 1;
            k_used = k + 1;

            let res = g[k + 1].abs();
            residual_history.push(res);
            final_residual = res;

            let happy = h_next <= f64::EPSILON * beta;
            if let Some(list) = iterates.as_mut() {
                let y = solve_upper(&h_cols, &g, k_used);
                let mut xi = x_tilde.clone();
                for (j, yj) in y.iter().enumerate() {
                    for i in 0..n {
                        xi[i] += yj * basis[j][i];
                    }
                }
                list.push(xi);
            }
            if res <= tol || happy {
                converged = true;
                breakdown = happy && res > tol;
                update_solution(&mut x_tilde, &basis, &h_cols, &g, k_used);
                break 'cycles;
            }
            for v in w.iter_mut() {
                *v /= h_next;
            }
            basis.push(w);
        }
        update_solution(&mut x_tilde, &basis, &h_cols, &g, k_used);
    }

    // x = P2^-1 S2^-1 x~
    let mut x = x_tilde;
    scaling.apply_s2_inv(&mut x);
    scaling.apply_p2_inv(&mut x);
    Ok(GmresResult {
        x,
        iters: total_iters,
        final_residual,
        converged,
        breakdown,
        residual_history,
        iterates_tilde: iterates,
    })
}

/// Back-solves the rotated triangular system for the Krylov coefficients.
fn solve_upper(h_cols: &[Vec<f64>], g: &[f64], k: usize) -> Vec<f64> {
    let mut y = vec![0.0; k];
    for i in (0..k).rev() {
        let mut acc = g[i];
        for j in i + 1..k {
            acc -= h_cols[j][i] * y[j];
        }
        y[i] = acc / h_cols[i][i];
    }
    y
}

fn update_solution(x: &mut [f64], basis: &[Vec<f64>], h_cols: &[Vec<f64>], g: &[f64], k: usize) {
    if k == 0 {
        return;
    }
    let y = solve_upper(h_cols, g, k);
    for (j, yj) in y.iter().enumerate() {
        for i in 0..x.len() {
            x[i] += yj * basis[j][i];
        }
    }
}

//! Difference-quotient Jacobians and Jacobian-vector products. One extra rhs
//! evaluation per column (forward differences); the perturbation is guarded
//! by the error weights so ill-scaled components still get a usable span.

use crate::{BlockDiagMatrix, LinalgError};
use lockstep_core::{wrms_norm_raw, CellBlock, Layout};

fn sqrt_ulp() -> f64 {
    f64::EPSILON.sqrt()
}

/// Column perturbation `sigma_j = max(sqrt(u)*|y_j|, 1/(n*w_j))`.
fn column_sigma(y_j: f64, w_j: f64, n: usize) -> f64 {
    (sqrt_ulp() * y_j.abs()).max(1.0 / (n as f64 * w_j))
}

/// Dense Jacobian of a single cell's rhs by forward differences, written
/// row-major into `jac`. `f0 = f(y)` must be supplied by the caller (it is
/// already available inside Newton).
pub fn fd_jacobian_dense<F>(
    mut rhs: F,
    y: &[f64],
    f0: &[f64],
    weights: &[f64],
    jac: &mut [f64],
) -> Result<(), LinalgError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), LinalgError>,
{
    let n = y.len();
    let sigmas: Vec<f64> = (0..n).map(|j| column_sigma(y[j], weights[j], n)).collect();
    fd_jacobian_dense_scaled(&mut rhs, y, f0, &sigmas, jac)
}

/// As `fd_jacobian_dense` with explicit per-column perturbations; also the
/// hook for perturbation-scale studies.
pub fn fd_jacobian_dense_scaled<F>(
    rhs: &mut F,
    y: &[f64],
    f0: &[f64],
    sigmas: &[f64],
    jac: &mut [f64],
) -> Result<(), LinalgError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), LinalgError>,
{
    let n = y.len();
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    for j in 0..n {
        let sigma = sigmas[j];
        yp[j] = y[j] + sigma;
        rhs(&yp, &mut fp)?;
        yp[j] = y[j];
        let inv = 1.0 / sigma;
        for i in 0..n {
            jac[i * n + j] = (fp[i] - f0[i]) * inv;
        }
    }
    Ok(())
}

/// Batched block-diagonal Jacobian over a cell-major batch: column j of
/// every cell is perturbed simultaneously, so the whole batch costs `n_comp`
/// rhs evaluations regardless of cell count. `batch_rhs` evaluates the rhs
/// of the full batch in cell-major order.
pub fn fd_jacobian_batched<F>(
    mut batch_rhs: F,
    y: &CellBlock,
    f0: &[f64],
    weights: &[f64],
) -> Result<BlockDiagMatrix, LinalgError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), LinalgError>,
{
    if y.layout != Layout::CellMajor {
        return Err(LinalgError::LayoutMismatch {
            expected: Layout::CellMajor,
            got: y.layout,
        });
    }
    let n = y.n_comp;
    let total = y.data.len();
    let mut jac = BlockDiagMatrix::zeros(y.n_cells, n);
    let mut yp = y.data.clone();
    let mut fp = vec![0.0; total];
    let mut sigmas = vec![0.0; y.n_cells];
    for j in 0..n {
        for c in 0..y.n_cells {
            let idx = c * n + j;
            // Per-cell length keeps the perturbation identical to the
            // single-cell path regardless of batch size (lockstep
            // reproducibility).
            sigmas[c] = column_sigma(y.data[idx], weights[idx], n);
            yp[idx] = y.data[idx] + sigmas[c];
        }
        batch_rhs(&yp, &mut fp)?;
        for c in 0..y.n_cells {
            let idx = c * n + j;
            yp[idx] = y.data[idx];
            let inv = 1.0 / sigmas[c];
            let blk = jac.block_mut(c);
            for i in 0..n {
                blk[i * n + j] = (fp[c * n + i] - f0[c * n + i]) * inv;
            }
        }
    }
    Ok(jac)
}

/// Directional difference `(f(y + sigma v) - f(y)) / sigma` approximating
/// `J v`, with `sigma = 1 / ||v||_wrms`. A zero direction returns zero
/// without an rhs evaluation.
pub fn jv_product<F>(
    mut rhs: F,
    y: &[f64],
    f0: &[f64],
    v: &[f64],
    weights: &[f64],
    out: &mut [f64],
) -> Result<(), LinalgError>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<(), LinalgError>,
{
    let vnorm = wrms_norm_raw(v, weights);
    if vnorm == 0.0 {
        out.fill(0.0);
        return Ok(());
    }
    let sigma = 1.0 / vnorm;
    let yp: Vec<f64> = y.iter().zip(v).map(|(yi, vi)| yi + sigma * vi).collect();
    rhs(&yp, out)?;
    let inv = 1.0 / sigma;
    for i in 0..out.len() {
        out[i] = (out[i] - f0[i]) * inv;
    }
    Ok(())
}

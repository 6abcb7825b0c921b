//! A batch of independent cells of one model as a single flat ODE problem
//! in cell-major order. The Jacobian is block diagonal with one dense block
//! per cell.

use lockstep_integrators::{IntegrateError, OdeProblem};
use lockstep_linalg::BlockDiagMatrix;
use lockstep_models::OdeSystem;

pub struct BatchProblem<'a> {
    pub system: &'a dyn OdeSystem,
    pub n_cells: usize,
    /// Per-cell frozen external forcing, flat cell-major
    /// (`n_cells * n_comp` values).
    pub f_ext: Vec<f64>,
}

impl<'a> BatchProblem<'a> {
    pub fn new(system: &'a dyn OdeSystem, n_cells: usize) -> BatchProblem<'a> {
        BatchProblem {
            system,
            n_cells,
            f_ext: vec![0.0; n_cells * system.n_comp()],
        }
    }

    pub fn with_forcing(
        system: &'a dyn OdeSystem,
        n_cells: usize,
        f_ext: Vec<f64>,
    ) -> BatchProblem<'a> {
        assert_eq!(f_ext.len(), n_cells * system.n_comp());
        BatchProblem {
            system,
            n_cells,
            f_ext,
        }
    }
}

impl OdeProblem for BatchProblem<'_> {
    fn n_cells(&self) -> usize {
        self.n_cells
    }

    fn n_comp(&self) -> usize {
        self.system.n_comp()
    }

    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), IntegrateError> {
        let n = self.system.n_comp();
        for c in 0..self.n_cells {
            let lo = c * n;
            self.system
                .rhs(t, &y[lo..lo + n], &self.f_ext[lo..lo + n], &mut out[lo..lo + n])
                .map_err(|e| IntegrateError::Rhs(format!("cell {c}: {e}")))?;
        }
        Ok(())
    }

    fn analytic_block_jacobian(
        &self,
        t: f64,
        y: &[f64],
        jac: &mut BlockDiagMatrix,
    ) -> Result<(), IntegrateError> {
        let n = self.system.n_comp();
        jac.reset();
        for c in 0..self.n_cells {
            let lo = c * n;
            self.system
                .analytic_jacobian(t, &y[lo..lo + n], jac.block_mut(c))
                .map_err(|e| IntegrateError::Rhs(format!("cell {c}: {e}")))?;
        }
        Ok(())
    }

    fn has_analytic_jacobian(&self) -> bool {
        self.system.has_analytic_jacobian()
    }
}

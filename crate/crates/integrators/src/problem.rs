//! The integrator-facing problem abstraction. A problem is a flat system of
//! `n_cells * n_comp` unknowns in cell-major order whose Jacobian is block
//! diagonal; a single cell is the degenerate one-block case.

use crate::IntegrateError;
use lockstep_linalg::BlockDiagMatrix;
use lockstep_models::OdeSystem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianKind {
    Analytic,
    Numerical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    /// Inexact Newton with scaled matrix-free GMRES and numerical
    /// Jacobian-vector products.
    InexactNewtonGmres,
    /// Modified Newton with batched dense LU over the block-diagonal
    /// Jacobian, reused across iterations and steps.
    ModifiedNewtonDirect(JacobianKind),
}

pub trait OdeProblem {
    fn n_cells(&self) -> usize;

    fn n_comp(&self) -> usize;

    fn n_dof(&self) -> usize {
        self.n_cells() * self.n_comp()
    }

    /// Full-system rhs over the flat cell-major state.
    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), IntegrateError>;

    /// Analytic block-diagonal Jacobian, one dense block per cell.
    fn analytic_block_jacobian(
        &self,
        t: f64,
        y: &[f64],
        jac: &mut BlockDiagMatrix,
    ) -> Result<(), IntegrateError> {
        let _ = (t, y, jac);
        Err(IntegrateError::JacobianNotProvided)
    }

    fn has_analytic_jacobian(&self) -> bool {
        false
    }
}

/// One cell of one model with a frozen external forcing.
pub struct SingleCell<'a> {
    pub system: &'a dyn OdeSystem,
    pub f_ext: Vec<f64>,
}

impl<'a> SingleCell<'a> {
    pub fn new(system: &'a dyn OdeSystem) -> SingleCell<'a> {
        let n = system.n_comp();
        SingleCell {
            system,
            f_ext: vec![0.0; n],
        }
    }

    pub fn with_forcing(system: &'a dyn OdeSystem, f_ext: Vec<f64>) -> SingleCell<'a> {
        SingleCell { system, f_ext }
    }
}

impl OdeProblem for SingleCell<'_> {
    fn n_cells(&self) -> usize {
        1
    }

    fn n_comp(&self) -> usize {
        self.system.n_comp()
    }

    fn rhs(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), IntegrateError> {
        self.system
            .rhs(t, y, &self.f_ext, out)
            .map_err(|e| IntegrateError::Rhs(e.to_string()))
    }

    fn analytic_block_jacobian(
        &self,
        t: f64,
        y: &[f64],
        jac: &mut BlockDiagMatrix,
    ) -> Result<(), IntegrateError> {
        jac.reset();
        self.system
            .analytic_jacobian(t, y, jac.block_mut(0))
            .map_err(|e| IntegrateError::Rhs(e.to_string()))
    }

    fn has_analytic_jacobian(&self) -> bool {
        self.system.has_analytic_jacobian()
    }
}

//! Adaptive time integration: variable-step variable-order BDF (orders 1-5)
//! with modified-Newton or inexact-Newton inner solvers, and an adaptive
//! embedded explicit Runge-Kutta integrator, both under WRMS-norm error
//! control.

mod bdf;
mod controller;
mod erk;
mod error;
mod h0;
mod newton;
mod problem;
mod refresh;

pub use bdf::{
    integrate_bdf, integrate_bdf_problem, integrate_bdf_with_history, BdfOptions, BdfResult,
    MAX_ORDER,
};
pub use controller::{
    rejection_factor, select_order_and_factor, step_factor, ControllerConfig, OrderChoice,
};
pub use erk::{integrate_erk, integrate_erk_problem, ErkOptions, ErkTableau, ZONNEVELD_43};
pub use error::IntegrateError;
pub use h0::estimate_h0;
pub use newton::{newton_solve, NewtonConfig, NewtonOutcome};
pub use problem::{JacobianKind, OdeProblem, SingleCell, SolverChoice};
pub use refresh::{refresh_policy, RefreshConfig, RefreshDecision, RefreshState};

use lockstep_linalg::LinalgError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("internal step budget exhausted after {n_steps} steps at t = {t}")]
    TooMuchWork { t: f64, n_steps: u64 },
    #[error("step size {h} fell below the minimum at t = {t}")]
    StepTooSmall { t: f64, h: f64 },
    #[error("repeated nonlinear convergence failures at t = {t}")]
    RepeatedConvergenceFailure { t: f64 },
    #[error("wall-clock deadline exceeded at t = {t}")]
    DeadlineExceeded { t: f64 },
    #[error("rhs evaluation failed: {0}")]
    Rhs(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("state became non-finite at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("analytic Jacobian not provided by this problem")]
    JacobianNotProvided,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl IntegrateError {
    /// Failures the step loop may answer with a step-size cut rather than an
    /// abort: state-dependent rhs rejections and non-finite intermediates.
    pub fn is_recoverable(&self) -> bool {
        matches!(
            self,
            IntegrateError::Rhs(_) | IntegrateError::NonFiniteState { .. }
        )
    }
}

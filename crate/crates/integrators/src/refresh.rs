//! Jacobian reuse policy for the modified-Newton path: keep the factored
//! Jacobian across iterations and steps unless it is stale, the step scaling
//! gamma has drifted, or the previous nonlinear attempt went bad.

#[derive(Debug, Clone)]
pub struct RefreshConfig {
    /// Maximum steps between Jacobian evaluations.
    pub msbj: u64,
    /// Relative gamma drift tolerated before a rebuild.
    pub dgmax: f64,
}

impl Default for RefreshConfig {
    fn default() -> Self {
        RefreshConfig {
            msbj: 51,
            dgmax: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefreshDecision {
    ReuseJacobian,
    RebuildJacobian,
}

#[derive(Debug, Clone)]
pub struct RefreshState {
    /// Steps since the Jacobian was last evaluated.
    pub jacobian_age: u64,
    /// Gamma at which the Jacobian was evaluated.
    pub gamma_j: f64,
    /// The previous Newton attempt diverged or otherwise failed.
    pub prev_failed: bool,
}

pub fn refresh_policy(state: &RefreshState, gamma: f64, cfg: &RefreshConfig) -> RefreshDecision {
    if state.prev_failed
        || state.jacobian_age >= cfg.msbj
        || (gamma / state.gamma_j - 1.0).abs() > cfg.dgmax
    {
        RefreshDecision::RebuildJacobian
    } else {
        RefreshDecision::ReuseJacobian
    }
}

//! Integration effort counters.

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    /// Accepted internal steps.
    pub n_steps: u64,
    pub n_rhs_evals: u64,
    pub n_newton_iters: u64,
    pub n_lin_iters: u64,
    pub n_jac_evals: u64,
    pub n_err_test_fails: u64,
    pub n_conv_fails: u64,
}

impl IntegratorStats {
    pub fn merge(&mut self, other: &IntegratorStats) {
        self.n_steps += other.n_steps;
        self.n_rhs_evals += other.n_rhs_evals;
        self.n_newton_iters += other.n_newton_iters;
        self.n_lin_iters += other.n_lin_iters;
        self.n_jac_evals += other.n_jac_evals;
        self.n_err_test_fails += other.n_err_test_fails;
        self.n_conv_fails += other.n_conv_fails;
    }
}

impl std::ops::AddAssign for IntegratorStats {
    fn add_assign(&mut self, rhs: IntegratorStats) {
        self.merge(&rhs);
    }
}

//! Pluggable ODE system definitions of the split form `dy/dt = f(t, y) + f_ext`,
//! where the external forcing is held constant over each integration interval.
//!
//! Three toy stiff systems with analytic Jacobians are provided, plus a linear
//! decay model for convergence oracles.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),
    #[error("analytic Jacobian not provided")]
    NotProvided,
    #[error("unknown model `{0}`")]
    UnknownModel(String),
    #[error("state length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
}

/// A spatially local ODE system. Implementations are immutable after
/// construction and shareable across concurrent integrator instances.
pub trait OdeSystem: Send + Sync {
    fn n_comp(&self) -> usize;

    fn component_names(&self) -> &[&'static str];

    /// Index of the temperature-like component used by the error metric.
    fn temperature_index(&self) -> Option<usize> {
        None
    }

    /// `out = f(t, y) + f_ext`, deterministic for fixed inputs.
    fn rhs(&self, t: f64, y: &[f64], f_ext: &[f64], out: &mut [f64]) -> Result<(), ModelError>;

    /// Dense row-major Jacobian `J[i*n + j] = d f_i / d y_j`. The constant
    /// external forcing contributes zero.
    fn analytic_jacobian(&self, t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        let _ = (t, y, out);
        Err(ModelError::NotProvided)
    }

    fn has_analytic_jacobian(&self) -> bool {
        true
    }
}

/// Per-component forcing in state units per second, constant over one outer
/// interval and updated only between intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalForcing {
    pub f_ext: Vec<f64>,
}

impl ExternalForcing {
    pub fn zero(n_comp: usize) -> ExternalForcing {
        ExternalForcing {
            f_ext: vec![0.0; n_comp],
        }
    }
}

fn check_len(expected: usize, got: usize) -> Result<(), ModelError> {
    if expected != got {
        return Err(ModelError::LengthMismatch { expected, got });
    }
    Ok(())
}

/// `dy_i/dt = lambda_i * y_i + f_ext_i` for each component.
#[derive(Debug, Clone)]
pub struct LinearDecay {
    pub lambda: Vec<f64>,
    names: Vec<&'static str>,
}

impl LinearDecay {
    pub fn new(lambda: Vec<f64>) -> LinearDecay {
        let names = vec!["y"; lambda.len()];
        LinearDecay { lambda, names }
    }

    pub fn scalar(lambda: f64) -> LinearDecay {
        LinearDecay::new(vec![lambda])
    }
}

impl OdeSystem for LinearDecay {
    fn n_comp(&self) -> usize {
        self.lambda.len()
    }

    fn component_names(&self) -> &[&'static str] {
        &self.names
    }

    fn rhs(&self, _t: f64, y: &[f64], f_ext: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        check_len(self.n_comp(), y.len())?;
        for i in 0..y.len() {
            out[i] = self.lambda[i] * y[i] + f_ext[i];
        }
        Ok(())
    }

    fn analytic_jacobian(&self, _t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        let n = self.n_comp();
        check_len(n, y.len())?;
        out.fill(0.0);
        for i in 0..n {
            out[i * n + i] = self.lambda[i];
        }
        Ok(())
    }
}

/// Robertson's three-species stiff kinetics problem.
///
/// `f1 = -k1 y1 + k3 y2 y3`, `f2 = k1 y1 - k3 y2 y3 - k2 y2^2`, `f3 = k2 y2^2`
/// with `(k1, k2, k3) = (0.04, 3e7, 1e4)`.
#[derive(Debug, Clone)]
pub struct Robertson {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl Default for Robertson {
    fn default() -> Self {
        Robertson {
            k1: 0.04,
            k2: 3e7,
            k3: 1e4,
        }
    }
}

pub const ROBERTSON_NAMES: [&str; 3] = ["y1", "y2", "y3"];

impl OdeSystem for Robertson {
    fn n_comp(&self) -> usize {
        3
    }

    fn component_names(&self) -> &[&'static str] {
        &ROBERTSON_NAMES
    }

    fn rhs(&self, _t: f64, y: &[f64], f_ext: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        check_len(3, y.len())?;
        let (y1, y2, y3) = (y[0], y[1], y[2]);
        out[0] = -self.k1 * y1 + self.k3 * y2 * y3 + f_ext[0];
        out[1] = self.k1 * y1 - self.k3 * y2 * y3 - self.k2 * y2 * y2 + f_ext[1];
        out[2] = self.k2 * y2 * y2 + f_ext[2];
        Ok(())
    }

    fn analytic_jacobian(&self, _t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        check_len(3, y.len())?;
        let (_, y2, y3) = (y[0], y[1], y[2]);
        // row 0
        out[0] = -self.k1;
        out[1] = self.k3 * y3;
        out[2] = self.k3 * y2;
        // row 1
        out[3] = self.k1;
        out[4] = -self.k3 * y3 - 2.0 * self.k2 * y2;
        out[5] = -self.k3 * y2;
        // row 2
        out[6] = 0.0;
        out[7] = 2.0 * self.k2 * y2;
        out[8] = 0.0;
        Ok(())
    }
}

/// Robertson with components rescaled by a fixed diagonal, manufacturing the
/// scale-disparity scenario for tolerance-strategy tests. With `z = s .* y`,
/// `dz/dt = s .* f(z ./ s)`.
#[derive(Debug, Clone)]
pub struct ScaledRobertson {
    pub inner: Robertson,
    pub scale: [f64; 3],
}

impl Default for ScaledRobertson {
    fn default() -> Self {
        ScaledRobertson {
            inner: Robertson::default(),
            scale: [1.0, 1e-4, 1e4],
        }
    }
}

pub const SCALED_ROBERTSON_NAMES: [&str; 3] = ["z1", "z2", "z3"];

impl OdeSystem for ScaledRobertson {
    fn n_comp(&self) -> usize {
        3
    }

    fn component_names(&self) -> &[&'static str] {
        &SCALED_ROBERTSON_NAMES
    }

    fn temperature_index(&self) -> Option<usize> {
        // The 1e4-scaled product species plays the temperature role in the
        // error metric.
        Some(2)
    }

    fn rhs(&self, t: f64, z: &[f64], f_ext: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        check_len(3, z.len())?;
        let y = [
            z[0] / self.scale[0],
            z[1] / self.scale[1],
            z[2] / self.scale[2],
        ];
        let zero = [0.0; 3];
        self.inner.rhs(t, &y, &zero, out)?;
        for i in 0..3 {
            out[i] = self.scale[i] * out[i] + f_ext[i];
        }
        Ok(())
    }

    fn analytic_jacobian(&self, t: f64, z: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        check_len(3, z.len())?;
        let y = [
            z[0] / self.scale[0],
            z[1] / self.scale[1],
            z[2] / self.scale[2],
        ];
        self.inner.analytic_jacobian(t, &y, out)?;
        for i in 0..3 {
            for j in 0..3 {
                out[i * 3 + j] *= self.scale[i] / self.scale[j];
            }
        }
        Ok(())
    }
}

/// Single-step ignition model with fuel fraction `Y` and temperature `T`:
/// `w = A * Y * exp(-Ta / T)`, `dY/dt = -w`, `dT/dt = q * w`.
#[derive(Debug, Clone)]
pub struct ToyIgnition {
    /// Pre-exponential factor (1/s).
    pub a: f64,
    /// Activation temperature (K).
    pub t_a: f64,
    /// Heat release per unit fuel (K).
    pub q: f64,
}

impl Default for ToyIgnition {
    fn default() -> Self {
        ToyIgnition {
            a: 1e8,
            t_a: 1e4,
            q: 2000.0,
        }
    }
}

pub const IGNITION_NAMES: [&str; 2] = ["Y", "T"];

impl ToyIgnition {
    pub fn reaction_rate(&self, y_fuel: f64, temp: f64) -> f64 {
        self.a * y_fuel * (-self.t_a / temp).exp()
    }
}

impl OdeSystem for ToyIgnition {
    fn n_comp(&self) -> usize {
        2
    }

    fn component_names(&self) -> &[&'static str] {
        &IGNITION_NAMES
    }

    fn temperature_index(&self) -> Option<usize> {
        Some(1)
    }

    fn rhs(&self, _t: f64, y: &[f64], f_ext: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        check_len(2, y.len())?;
        let temp = y[1];
        if temp <= 0.0 {
            return Err(ModelError::NonPositiveTemperature(temp));
        }
        let w = self.reaction_rate(y[0], temp);
        out[0] = -w + f_ext[0];
        out[1] = self.q * w + f_ext[1];
        Ok(())
    }

    fn analytic_jacobian(&self, _t: f64, y: &[f64], out: &mut [f64]) -> Result<(), ModelError> {
        check_len(2, y.len())?;
        let temp = y[1];
        if temp <= 0.0 {
            return Err(ModelError::NonPositiveTemperature(temp));
        }
        let arr = (-self.t_a / temp).exp();
        let dw_dy = self.a * arr;
        let dw_dt = self.a * y[0] * arr * self.t_a / (temp * temp);
        out[0] = -dw_dy;
        out[1] = -dw_dt;
        out[2] = self.q * dw_dy;
        out[3] = self.q * dw_dt;
        Ok(())
    }
}

/// Model selection by harness name.
pub fn by_name(name: &str) -> Result<Box<dyn OdeSystem>, ModelError> {
    match name {
        "linear" => Ok(Box::new(LinearDecay::scalar(-1.0))),
        "robertson" => Ok(Box::new(Robertson::default())),
        "robertson-scaled" => Ok(Box::new(ScaledRobertson::default())),
        "ignition" => Ok(Box::new(ToyIgnition::default())),
        other => Err(ModelError::UnknownModel(other.to_string())),
    }
}

/// Canonical initial state for a named model.
pub fn initial_state(name: &str) -> Result<Vec<f64>, ModelError> {
    match name {
        "linear" => Ok(vec![1.0]),
        "robertson" | "robertson-scaled" => Ok(vec![1.0, 0.0, 0.0]),
        "ignition" => Ok(vec![1.0, 600.0]),
        other => Err(ModelError::UnknownModel(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Central-difference Jacobian oracle (test-only; the production path
    /// uses one-sided differences elsewhere).
    fn central_fd_jacobian(sys: &dyn OdeSystem, t: f64, y: &[f64]) -> Vec<f64> {
        let n = sys.n_comp();
        let zero = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        let mut fp = vec![0.0; n];
        let mut fm = vec![0.0; n];
        for j in 0..n {
            let h = 1e-6 * y[j].abs().max(1e-6);
            let mut yp = y.to_vec();
            let mut ym = y.to_vec();
            yp[j] += h;
            ym[j] -= h;
            sys.rhs(t, &yp, &zero, &mut fp).unwrap();
            sys.rhs(t, &ym, &zero, &mut fm).unwrap();
            for i in 0..n {
                jac[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
            }
        }
        jac
    }

    fn assert_jacobian_matches(sys: &dyn OdeSystem, y: &[f64], tol: f64) {
        let n = sys.n_comp();
        let mut analytic = vec![0.0; n * n];
        sys.analytic_jacobian(0.0, y, &mut analytic).unwrap();
        let fd = central_fd_jacobian(sys, 0.0, y);
        for i in 0..n * n {
            let scale = 1.0 + analytic[i].abs();
            assert!(
                (analytic[i] - fd[i]).abs() / scale <= tol,
                "entry {i}: analytic {} vs fd {}",
                analytic[i],
                fd[i]
            );
        }
    }

    #[test]
    fn linear_decay_examples() {
        let sys = LinearDecay::scalar(-1.0);
        let mut out = [0.0];
        sys.rhs(0.0, &[1.0], &[0.0], &mut out).unwrap();
        assert_eq!(out[0], -1.0);
        sys.rhs(0.0, &[0.0], &[0.0], &mut out).unwrap();
        assert_eq!(out[0], 0.0);
        let sys = LinearDecay::scalar(-2.0);
        sys.rhs(0.0, &[3.0], &[1.0], &mut out).unwrap();
        assert_eq!(out[0], -5.0);
    }

    #[test]
    fn robertson_examples() {
        let sys = Robertson::default();
        let mut out = [0.0; 3];
        sys.rhs(0.0, &[1.0, 0.0, 0.0], &[0.0; 3], &mut out).unwrap();
        assert_eq!(out, [-0.04, 0.04, 0.0]);
        sys.rhs(0.0, &[0.0, 0.0, 0.0], &[0.0; 3], &mut out).unwrap();
        assert_eq!(out, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn robertson_mass_conservation_identity() {
        let sys = Robertson::default();
        let f_ext = [0.5, -0.25, 2.0];
        let mut out = [0.0; 3];
        sys.rhs(0.0, &[0.3, 1e-5, 0.7], &f_ext, &mut out).unwrap();
        let sum: f64 = out.iter().sum();
        let fsum: f64 = f_ext.iter().sum();
        assert!((sum - fsum).abs() < 1e-12);
    }

    #[test]
    fn ignition_examples() {
        let sys = ToyIgnition::default();
        let mut out = [0.0; 2];
        // No fuel, no reaction.
        sys.rhs(0.0, &[0.0, 700.0], &[0.3, -0.1], &mut out).unwrap();
        assert_eq!(out, [0.3, -0.1]);
        // Direct evaluation at the reactor initial state.
        sys.rhs(0.0, &[1.0, 600.0], &[0.0; 2], &mut out).unwrap();
        let w = 1e8 * (-1e4_f64 / 600.0).exp();
        assert!((out[0] + w).abs() <= 1e-15 * w);
        assert!((out[1] - 2000.0 * w).abs() <= 1e-12 * (2000.0 * w));
    }

    #[test]
    fn ignition_energy_coupling_identity() {
        let sys = ToyIgnition::default();
        let f_ext = [0.1, -0.7];
        let mut out = [0.0; 2];
        for (y, t) in [(1.0, 600.0), (0.5, 1500.0), (0.01, 2590.0)] {
            sys.rhs(0.0, &[y, t], &f_ext, &mut out).unwrap();
            let resid = sys.q * (out[0] - f_ext[0]) + (out[1] - f_ext[1]);
            assert!(resid.abs() <= 1e-9 * out[1].abs().max(1.0));
        }
    }

    #[test]
    fn ignition_rejects_nonpositive_temperature() {
        let sys = ToyIgnition::default();
        let mut out = [0.0; 2];
        assert!(matches!(
            sys.rhs(0.0, &[1.0, -5.0], &[0.0; 2], &mut out),
            Err(ModelError::NonPositiveTemperature(_))
        ));
    }

    #[test]
    fn robertson_jacobian_column_one() {
        let sys = Robertson::default();
        let mut jac = [0.0; 9];
        sys.analytic_jacobian(0.0, &[1.0, 0.0, 0.0], &mut jac).unwrap();
        assert_eq!([jac[0], jac[3], jac[6]], [-0.04, 0.04, 0.0]);
    }

    #[test]
    fn ignition_cross_derivative() {
        let sys = ToyIgnition::default();
        let y = [0.4, 900.0];
        let mut jac = [0.0; 4];
        sys.analytic_jacobian(0.0, &y, &mut jac).unwrap();
        let expected = sys.q * sys.a * (-sys.t_a / y[1]).exp();
        assert!((jac[2] - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn analytic_jacobians_match_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let y = [
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1e-4),
                rng.gen_range(0.0..1.0),
            ];
            assert_jacobian_matches(&Robertson::default(), &y, 1e-5);
            let z = [
                rng.gen_range(0.0..1.0),
                rng.gen_range(0.0..1e-8),
                rng.gen_range(0.0..1e4),
            ];
            assert_jacobian_matches(&ScaledRobertson::default(), &z, 1e-5);
            let yt = [rng.gen_range(0.0..1.0), rng.gen_range(600.0..2600.0)];
            assert_jacobian_matches(&ToyIgnition::default(), &yt, 1e-4);
            assert_jacobian_matches(&LinearDecay::new(vec![-1.0, -50.0]), &[1.0, 2.0], 1e-7);
        }
    }

    #[test]
    fn rhs_is_pure() {
        let sys = ToyIgnition::default();
        let y = [0.7, 1100.0];
        let mut a = [0.0; 2];
        let mut b = [0.0; 2];
        sys.rhs(0.0, &y, &[0.0; 2], &mut a).unwrap();
        sys.rhs(0.0, &y, &[0.0; 2], &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn model_lookup() {
        for name in ["linear", "robertson", "robertson-scaled", "ignition"] {
            let sys = by_name(name).unwrap();
            let y0 = initial_state(name).unwrap();
            assert_eq!(sys.n_comp(), y0.len());
        }
        assert!(matches!(
            by_name("dodecane"),
            Err(ModelError::UnknownModel(_))
        ));
    }
}

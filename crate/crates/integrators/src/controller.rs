//! Step-size and order selection. The step factor uses the biased error
//! form factor = (bias * ||LTE||)^(-1/(q+1)), whose fixed point sits at
//! ||LTE|| = 1/bias, clamped by a growth cap (larger on the very first
//! adaptation) and a reduction floor on rejection.

#[derive(Debug, Clone)]
pub struct ControllerConfig {
    /// Error bias inside the root; the controller aims at ||LTE|| = 1/bias.
    pub bias: f64,
    pub growth_cap: f64,
    /// Cap applied to the first adaptation only, when h0 is a crude guess.
    pub first_growth_cap: f64,
    pub reduction_floor: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            bias: 6.0,
            growth_cap: 10.0,
            first_growth_cap: 1e4,
            reduction_floor: 0.1,
        }
    }
}

fn raw_factor(err_norm: f64, order: usize, bias: f64) -> f64 {
    if err_norm <= 0.0 {
        f64::INFINITY
    } else {
        (bias * err_norm).powf(-1.0 / (order as f64 + 1.0))
    }
}

/// Growth factor after an accepted step of the given order.
pub fn step_factor(err_norm: f64, order: usize, cfg: &ControllerConfig, first: bool) -> f64 {
    let cap = if first {
        cfg.first_growth_cap
    } else {
        cfg.growth_cap
    };
    raw_factor(err_norm, order, cfg.bias).min(cap)
}

/// Reduction factor after an error-test rejection. Repeated rejections
/// clamp the factor harder.
pub fn rejection_factor(
    err_norm: f64,
    order: usize,
    cfg: &ControllerConfig,
    consecutive_failures: u32,
) -> f64 {
    let mut f = raw_factor(err_norm, order, cfg.bias)
        .max(cfg.reduction_floor)
        .min(1.0);
    if consecutive_failures >= 2 {
        f = f.min(0.2);
    }
    f
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderChoice {
    pub order: usize,
    pub factor: f64,
}

/// Chooses among orders {q-1, q, q+1} the one whose controller would permit
/// the largest next step, given the WRMS LTE estimate of each candidate
/// (infinite where a candidate is unavailable). Ties prefer the lower order.
pub fn select_order_and_factor(
    order: usize,
    err_lower: f64,
    err_current: f64,
    err_higher: f64,
    cfg: &ControllerConfig,
    first: bool,
) -> OrderChoice {
    let cap = if first {
        cfg.first_growth_cap
    } else {
        cfg.growth_cap
    };
    let candidates = [
        (order.saturating_sub(1), err_lower),
        (order, err_current),
        (order + 1, err_higher),
    ];
    let mut best = OrderChoice {
        order,
        factor: 0.0,
    };
    let mut best_factor = f64::NEG_INFINITY;
    for &(q, err) in &candidates {
        if !err.is_finite() && err != 0.0 {
            continue;
        }
        let f = raw_factor(err, q, cfg.bias);
        if f > best_factor {
            best_factor = f;
            best = OrderChoice {
                order: q,
                factor: f.min(cap),
            };
        }
    }
    best
}

//! Diagonal scaling and preconditioner hooks for the transformed linear
//! system solved by GMRES. The scaled operator is
//! `A~ = S1 P1^-1 A P2^-1 S2^-1` with rhs `b~ = S1 P1^-1 b` and solution
//! back-transform `x = P2^-1 S2^-1 x~`; S1 and S2 are diagonal with the
//! error-weight entries.

/// In-place preconditioner application; the default hooks are exact
/// identities.
pub type PrecondHook<'a> = &'a (dyn Fn(&mut [f64]) + Sync);

pub struct ScalingOperators<'a> {
    /// Left diagonal scaling entries (strictly positive).
    pub s1: &'a [f64],
    /// Right diagonal scaling entries (strictly positive).
    pub s2: &'a [f64],
    /// Applies P1^-1 in place; `None` means identity.
    pub p1_inv: Option<PrecondHook<'a>>,
    /// Applies P2^-1 in place; `None` means identity.
    pub p2_inv: Option<PrecondHook<'a>>,
}

impl<'a> ScalingOperators<'a> {
    /// Both scalings set to the error weights, identity preconditioners.
    pub fn from_weights(w: &'a [f64]) -> ScalingOperators<'a> {
        ScalingOperators {
            s1: w,
            s2: w,
            p1_inv: None,
            p2_inv: None,
        }
    }

    pub fn apply_s1(&self, v: &mut [f64]) {
        for (x, w) in v.iter_mut().zip(self.s1) {
            *x *= w;
        }
    }

    pub fn apply_s2_inv(&self, v: &mut [f64]) {
        for (x, w) in v.iter_mut().zip(self.s2) {
            *x /= w;
        }
    }

    pub fn apply_p1_inv(&self, v: &mut [f64]) {
        if let Some(hook) = self.p1_inv {
            hook(v);
        }
    }

    pub fn apply_p2_inv(&self, v: &mut [f64]) {
        if let Some(hook) = self.p2_inv {
            hook(v);
        }
    }
}

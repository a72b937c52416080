//! Resolution-dependent tolerances.
//!
//! Every comparison in the crate is made against one of these two scales.
//! Both grow linearly with the grid spacing and the Lipschitz bound of the
//! data, and both floor at floating-point noise.

use crate::scalar::Scalar;

/// Floating-point floor: `1e-12` for `f64`, `64·ε` for coarser types.
pub fn noise_floor<S: Scalar>() -> S {
    S::lit(1e-12).max(S::epsilon() * S::lit(64.0))
}

/// Representation tolerance `4·lip·h + floor`.
pub fn tol_rep<S: Scalar>(lip: S, h: S) -> S {
    S::lit(4.0) * lip * h + noise_floor::<S>()
}

/// Gradient tolerance `10·lip·h + floor`.
pub fn tol_grad<S: Scalar>(lip: S, h: S) -> S {
    S::lit(10.0) * lip * h + noise_floor::<S>()
}

/// Both tolerances for one data scale, as printed in reports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<S> {
    pub rep: S,
    pub grad: S,
}

impl<S: Scalar> Tolerances<S> {
    pub fn new(lip: S, h: S) -> Self {
        Self { rep: tol_rep(lip, h), grad: tol_grad(lip, h) }
    }
}

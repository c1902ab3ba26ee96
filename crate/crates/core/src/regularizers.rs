//! Regularizers `Ω`, their conjugates `Ω*`, and the polar support function
//! used to rescale gradients into the dual domain.

use crate::ext::ExtendedReal;
use crate::linalg::{norm2_sq, norm_inf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegKind {
    /// `½‖β‖²`, 1-strongly convex with `Ω* = ½‖·‖²`.
    Ridge,
    /// `‖β‖₁`, whose conjugate is the indicator of the unit `ℓ∞` ball.
    L1,
}

/// Value of `σ°_{dom Ω*}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolarSupport {
    Value(f64),
    /// `dom Ω*` is the whole space, so no rescaling applies.
    Inactive,
}

impl RegKind {
    pub fn eval(&self, beta: &[f64]) -> f64 {
        match self {
            RegKind::Ridge => 0.5 * norm2_sq(beta),
            RegKind::L1 => beta.iter().map(|b| b.abs()).sum(),
        }
    }

    pub fn conjugate(&self, v: &[f64]) -> ExtendedReal {
        match self {
            RegKind::Ridge => ExtendedReal::Finite(0.5 * norm2_sq(v)),
            RegKind::L1 => {
                if norm_inf(v) <= 1.0 {
                    ExtendedReal::ZERO
                } else {
                    ExtendedReal::PosInfinity
                }
            }
        }
    }

    pub fn polar_support(&self, v: &[f64]) -> PolarSupport {
        match self {
            RegKind::Ridge => PolarSupport::Inactive,
            RegKind::L1 => PolarSupport::Value(norm_inf(v)),
        }
    }

    pub fn is_strongly_convex(&self) -> bool {
        matches!(self, RegKind::Ridge)
    }

    /// `prox_{tΩ}(v)`, written in place.
    pub fn prox(&self, t: f64, v: &mut [f64]) {
        match self {
            RegKind::Ridge => {
                let s = 1.0 / (1.0 + t);
                v.iter_mut().for_each(|x| *x *= s);
            }
            RegKind::L1 => v.iter_mut().for_each(|x| *x = soft_threshold(*x, t)),
        }
    }
}

#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

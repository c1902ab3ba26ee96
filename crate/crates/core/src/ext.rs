//! Extended real values returned by conjugates and dual objectives.

use core::fmt;

/// A value of `ℝ ∪ {−∞, +∞}`.
///
/// Conjugates return [`ExtendedReal::PosInfinity`] outside their domain and
/// the dual objective returns [`ExtendedReal::NegInfinity`] for infeasible
/// dual vectors. Keeping the marker out of `f64` means an infeasible term can
/// never be silently absorbed into a sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal::Finite(0.0);

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedReal::Finite(_))
    }

    /// Sum of two extended reals. `+∞ + −∞` is not representable and panics;
    /// conjugate sums only ever mix one sign of infinity.
    pub fn add(self, other: ExtendedReal) -> ExtendedReal {
        use ExtendedReal::*;
        match (self, other) {
            (Finite(a), Finite(b)) => Finite(a + b),
            (PosInfinity, NegInfinity) | (NegInfinity, PosInfinity) => {
                panic!("undefined sum of opposite infinities")
            }
            (PosInfinity, _) | (_, PosInfinity) => PosInfinity,
            (NegInfinity, _) | (_, NegInfinity) => NegInfinity,
        }
    }

    pub fn neg(self) -> ExtendedReal {
        match self {
            ExtendedReal::NegInfinity => ExtendedReal::PosInfinity,
            ExtendedReal::Finite(v) => ExtendedReal::Finite(-v),
            ExtendedReal::PosInfinity => ExtendedReal::NegInfinity,
        }
    }

    pub fn scale(self, c: f64) -> ExtendedReal {
        debug_assert!(c > 0.0);
        match self {
            ExtendedReal::Finite(v) => ExtendedReal::Finite(c * v),
            other => other,
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedReal::NegInfinity => f.write_str("-inf"),
            ExtendedReal::Finite(v) => write!(f, "{v}"),
            ExtendedReal::PosInfinity => f.write_str("+inf"),
        }
    }
}

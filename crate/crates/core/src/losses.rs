//! Convex losses `ℓ(y, u)` between a label `y` and a prediction `u`, with
//! derivatives, Fenchel conjugates `ℓ*(y, v) = sup_u (uv − ℓ(y, u))` and the
//! regularity constants that drive the homotopy step size.
//!
//! All four losses are translation invariant, `ℓ(y, u) = h(u − y)`, so the
//! conjugate always splits as `ℓ*(y, v) = yv + h*(v)`.

use thiserror::Error;

use crate::ext::ExtendedReal;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum LossError {
    #[error("invalid loss parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("loss value overflows at label {label}, prediction {prediction}")]
    NumericRange { label: f64, prediction: f64 },
}

/// Supported losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LossKind {
    /// `(y − u)²`.
    Quadratic,
    /// `|y − u|^q` with `1 < q ≤ 2`.
    Power { q: f64 },
    /// `γ log cosh((u − y)/γ)` with `γ > 0`.
    LogCosh { gamma: f64 },
    /// `exp(γ(y − u)) − γ(y − u) − 1` with `γ ≠ 0`. Not symmetric in `(y, u)`.
    Linex { gamma: f64 },
}

/// Derivative with respect to the prediction, flagged when the point is a kink
/// and the value is a designated subgradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub at_kink: bool,
}

/// Modulus `V(t) = coef · t^exponent` of a uniformly smooth loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerModulus {
    pub coef: f64,
    pub exponent: f64,
}

impl PowerModulus {
    pub fn value(&self, t: f64) -> f64 {
        self.coef * libm::pow(t.abs(), self.exponent)
    }

    /// Generalized inverse: the largest `t ≥ 0` with `V(t) ≤ budget`.
    pub fn inverse(&self, budget: f64) -> f64 {
        if budget <= 0.0 {
            return 0.0;
        }
        libm::pow(budget / self.coef, 1.0 / self.exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegularityClass {
    /// `ℓ(y, ·)` has a `ν`-Lipschitz derivative.
    Smooth { nu: f64 },
    /// `ℓ(y, ·)` is `ν`-Lipschitz.
    Lipschitz { nu: f64 },
    /// `ℓ(y, u + t) ≤ ℓ(y, u) + ℓ'(y, u) t + V(|t|)`.
    UniformlySmooth(PowerModulus),
    /// Smooth only on bounded ranges: the curvature over `|y − u| ≤ Δ` is at
    /// most `γ² exp(|γ| Δ)`.
    LocallySmooth { gamma: f64 },
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularity {
    pub class: RegularityClass,
    pub strong_convexity: Option<f64>,
}

impl Regularity {
    /// Global smoothness constant, if there is one.
    pub fn smoothness(&self) -> Option<f64> {
        match self.class {
            RegularityClass::Smooth { nu } => Some(nu),
            _ => None,
        }
    }
}

/// Curvature bound of the linex loss over `|y − u| ≤ delta_max`.
pub fn linex_curvature(gamma: f64, delta_max: f64) -> f64 {
    gamma * gamma * libm::exp(gamma.abs() * delta_max)
}

// Largest argument of exp that does not overflow.
const EXP_MAX: f64 = 709.0;

impl LossKind {
    pub fn power(q: f64) -> Result<Self, LossError> {
        let l = LossKind::Power { q };
        l.validate().map(|_| l)
    }

    pub fn logcosh(gamma: f64) -> Result<Self, LossError> {
        let l = LossKind::LogCosh { gamma };
        l.validate().map(|_| l)
    }

    pub fn linex(gamma: f64) -> Result<Self, LossError> {
        let l = LossKind::Linex { gamma };
        l.validate().map(|_| l)
    }

    pub fn validate(&self) -> Result<(), LossError> {
        match *self {
            LossKind::Quadratic => Ok(()),
            LossKind::Power { q } if q > 1.0 && q <= 2.0 => Ok(()),
            LossKind::Power { .. } => Err(LossError::InvalidParameter("power exponent must lie in (1, 2]")),
            LossKind::LogCosh { gamma } if gamma > 0.0 && gamma.is_finite() => Ok(()),
            LossKind::LogCosh { .. } => Err(LossError::InvalidParameter("logcosh scale must be positive")),
            LossKind::Linex { gamma } if gamma != 0.0 && gamma.is_finite() => Ok(()),
            LossKind::Linex { .. } => Err(LossError::InvalidParameter("linex asymmetry must be nonzero")),
        }
    }

    /// `true` when `ℓ(a, b) = ℓ(b, a)`.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, LossKind::Linex { .. })
    }

    /// `ℓ(y, u)`, possibly `+∞` when the linex exponential overflows. Use
    /// [`LossKind::eval`] where overflow must be reported.
    #[inline]
    pub fn value(&self, y: f64, u: f64) -> f64 {
        match *self {
            LossKind::Quadratic => {
                let d = y - u;
                d * d
            }
            LossKind::Power { q } => libm::pow((y - u).abs(), q),
            LossKind::LogCosh { gamma } => gamma * log_cosh((u - y) / gamma),
            LossKind::Linex { gamma } => {
                let x = gamma * (y - u);
                if x > EXP_MAX {
                    f64::INFINITY
                } else {
                    libm::expm1(x) - x
                }
            }
        }
    }

    /// `ℓ(y, u)`, reporting overflow instead of returning infinity.
    pub fn eval(&self, y: f64, u: f64) -> Result<f64, LossError> {
        let v = self.value(y, u);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(LossError::NumericRange { label: y, prediction: u })
        }
    }

    /// `∂ℓ(y, u)/∂u`. At the kink of the power loss this is the subgradient 0.
    #[inline]
    pub fn grad(&self, y: f64, u: f64) -> f64 {
        match *self {
            LossKind::Quadratic => 2.0 * (u - y),
            LossKind::Power { q } => {
                let d = u - y;
                if d == 0.0 {
                    0.0
                } else {
                    q * libm::pow(d.abs(), q - 1.0) * d.signum()
                }
            }
            LossKind::LogCosh { gamma } => libm::tanh((u - y) / gamma),
            LossKind::Linex { gamma } => {
                let x = gamma * (y - u);
                if x > EXP_MAX {
                    -gamma * f64::INFINITY
                } else {
                    -gamma * libm::expm1(x)
                }
            }
        }
    }

    pub fn derivative(&self, y: f64, u: f64) -> Derivative {
        let at_kink = matches!(*self, LossKind::Power { q } if q < 2.0 && u == y);
        Derivative {
            value: self.grad(y, u),
            at_kink,
        }
    }

    /// `∂²ℓ(y, u)/∂u²` (infinite at the power-loss kink for `q < 2`).
    pub fn curvature(&self, y: f64, u: f64) -> f64 {
        match *self {
            LossKind::Quadratic => 2.0,
            LossKind::Power { q } => {
                let d = (u - y).abs();
                if q == 2.0 {
                    2.0
                } else if d == 0.0 {
                    f64::INFINITY
                } else {
                    q * (q - 1.0) * libm::pow(d, q - 2.0)
                }
            }
            LossKind::LogCosh { gamma } => {
                let c = libm::cosh((u - y) / gamma);
                1.0 / (gamma * c * c)
            }
            LossKind::Linex { gamma } => gamma * gamma * libm::exp(gamma * (y - u)),
        }
    }

    /// `ℓ*(y, v) = sup_u (uv − ℓ(y, u))`.
    pub fn conjugate(&self, y: f64, v: f64) -> ExtendedReal {
        if v == 0.0 {
            return ExtendedReal::ZERO;
        }
        let h_star = match *self {
            LossKind::Quadratic => v * v / 4.0,
            LossKind::Power { q } => {
                let dual = q / (q - 1.0);
                (q - 1.0) * libm::pow(v.abs() / q, dual)
            }
            LossKind::LogCosh { gamma } => {
                if v.abs() > 1.0 {
                    return ExtendedReal::PosInfinity;
                }
                gamma * 0.5 * (xlog1px(v) + xlog1px(-v))
            }
            LossKind::Linex { gamma } => {
                // r = 1 − v/γ must be nonnegative; r log r − (r − 1) with r = 1 + s.
                let s = -v / gamma;
                if s < -1.0 {
                    return ExtendedReal::PosInfinity;
                }
                xlog1px(s) - s
            }
        };
        ExtendedReal::Finite(y * v + h_star)
    }

    pub fn regularity(&self) -> Regularity {
        match *self {
            LossKind::Quadratic | LossKind::Power { q: 2.0 } => Regularity {
                class: RegularityClass::Smooth { nu: 2.0 },
                strong_convexity: Some(2.0),
            },
            LossKind::Power { q } => Regularity {
                class: RegularityClass::UniformlySmooth(PowerModulus {
                    coef: libm::pow(2.0, 2.0 - q),
                    exponent: q,
                }),
                strong_convexity: None,
            },
            LossKind::LogCosh { gamma } => Regularity {
                class: RegularityClass::Smooth { nu: 1.0 / gamma },
                strong_convexity: None,
            },
            LossKind::Linex { gamma } => Regularity {
                class: RegularityClass::LocallySmooth { gamma },
                strong_convexity: None,
            },
        }
    }

    /// Lipschitz constant of `ℓ(y, ·)` when it is finite.
    pub fn lipschitz_constant(&self) -> Option<f64> {
        match self {
            LossKind::LogCosh { .. } => Some(1.0),
            _ => None,
        }
    }

    /// Offsets `d` such that `|∂ℓ(u + d, u)/∂u| ≤ c`, i.e. the set of labels
    /// `u + d` whose gradient score at prediction `u` stays below `c`. The
    /// set is an interval (possibly unbounded); `None` when it is empty.
    pub fn gradient_sublevel(&self, c: f64) -> Option<(f64, f64)> {
        if c < 0.0 || c.is_nan() {
            return None;
        }
        match *self {
            LossKind::Quadratic => Some((-c / 2.0, c / 2.0)),
            LossKind::Power { q } => {
                let r = libm::pow(c / q, 1.0 / (q - 1.0));
                Some((-r, r))
            }
            LossKind::LogCosh { gamma } => {
                if c >= 1.0 {
                    Some((f64::NEG_INFINITY, f64::INFINITY))
                } else {
                    let r = gamma * libm::atanh(c);
                    Some((-r, r))
                }
            }
            LossKind::Linex { gamma } => {
                // |γ (1 − e^{γd})| ≤ c  ⇔  e^{γd} ∈ [1 − c/|γ|, 1 + c/|γ|].
                let ratio = c / gamma.abs();
                let lo = if ratio >= 1.0 {
                    f64::NEG_INFINITY
                } else {
                    libm::log1p(-ratio)
                };
                let hi = libm::log1p(ratio);
                if gamma > 0.0 {
                    Some((lo / gamma, hi / gamma))
                } else {
                    Some((hi / gamma, lo / gamma))
                }
            }
        }
    }
}

/// `log cosh x` without overflow.
fn log_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + libm::log1p(libm::exp(-2.0 * a)) - core::f64::consts::LN_2
}

/// `(1 + x) log(1 + x)` for `x ≥ −1`, with `0 log 0 = 0`.
fn xlog1px(x: f64) -> f64 {
    if x == -1.0 {
        0.0
    } else {
        (1.0 + x) * libm::log1p(x)
    }
}

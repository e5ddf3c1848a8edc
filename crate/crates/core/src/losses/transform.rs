use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// The transformation functions φ: ℝ → ℝ used to build margin-type losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhiKind {
    ZeroOne,
    Identity,
    Linear,
    Hinge,
    Modulus,
    Squared,
    TruncatedSquare,
    Exponential,
    Logistic,
    Sigmoid,
    /// Hinge plus a second hinge starting at τ.
    Kink,
    /// |t|^a / a
    AbsPower,
    /// max(t, 0)^a / a
    PlusPower,
    /// (a·t + b)²
    AffineSquare,
}

impl PhiKind {
    pub const ALL: [PhiKind; 14] = [
        PhiKind::ZeroOne,
        PhiKind::Identity,
        PhiKind::Linear,
        PhiKind::Hinge,
        PhiKind::Modulus,
        PhiKind::Squared,
        PhiKind::TruncatedSquare,
        PhiKind::Exponential,
        PhiKind::Logistic,
        PhiKind::Sigmoid,
        PhiKind::Kink,
        PhiKind::AbsPower,
        PhiKind::PlusPower,
        PhiKind::AffineSquare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PhiKind::ZeroOne => "zero-one",
            PhiKind::Identity => "identity",
            PhiKind::Linear => "linear",
            PhiKind::Hinge => "hinge",
            PhiKind::Modulus => "modulus",
            PhiKind::Squared => "squared",
            PhiKind::TruncatedSquare => "truncated-square",
            PhiKind::Exponential => "exponential",
            PhiKind::Logistic => "logistic",
            PhiKind::Sigmoid => "sigmoid",
            PhiKind::Kink => "kink",
            PhiKind::AbsPower => "abs-power",
            PhiKind::PlusPower => "plus-power",
            PhiKind::AffineSquare => "affine-square",
        }
    }
}

impl fmt::Display for PhiKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PhiKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let k = match s.trim().to_ascii_lowercase().as_str() {
            "zero-one" | "zeroone" | "0-1" => PhiKind::ZeroOne,
            "identity" => PhiKind::Identity,
            "linear" => PhiKind::Linear,
            "hinge" => PhiKind::Hinge,
            "modulus" => PhiKind::Modulus,
            "squared" | "square" => PhiKind::Squared,
            "truncated-square" | "truncated-squared" => PhiKind::TruncatedSquare,
            "exponential" | "exp" => PhiKind::Exponential,
            "logistic" | "logit" => PhiKind::Logistic,
            "sigmoid" => PhiKind::Sigmoid,
            "kink" => PhiKind::Kink,
            "abs-power" => PhiKind::AbsPower,
            "plus-power" => PhiKind::PlusPower,
            "affine-square" => PhiKind::AffineSquare,
            other => return Err(Error::field("phi.kind", format!("unknown transformation `{other}`"))),
        };
        Ok(k)
    }
}

/// A transformation function with its parameters.
///
/// `floor`, when set, evaluates φ(max(t, floor)); this is how the clipped
/// transform returned by [`effective_transform`] is represented.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub kind: PhiKind,
    /// Kink location (kink only).
    pub tau: f64,
    /// Exponent for the power kinds, slope for affine-square.
    pub a: f64,
    /// Offset for affine-square.
    pub b: f64,
    pub floor: Option<f64>,
}

impl Transform {
    pub const fn new(kind: PhiKind) -> Self {
        let (a, b) = match kind {
            PhiKind::AbsPower | PhiKind::PlusPower => (2.0, 0.0),
            PhiKind::AffineSquare => (1.0, 1.0),
            _ => (0.0, 0.0),
        };
        Transform { kind, tau: 0.0, a, b, floor: None }
    }

    pub const fn hinge() -> Self {
        Self::new(PhiKind::Hinge)
    }

    pub const fn squared() -> Self {
        Self::new(PhiKind::Squared)
    }

    pub const fn exponential() -> Self {
        Self::new(PhiKind::Exponential)
    }

    pub const fn logistic() -> Self {
        Self::new(PhiKind::Logistic)
    }

    pub const fn kink(tau: f64) -> Self {
        Transform { tau, ..Self::new(PhiKind::Kink) }
    }

    pub const fn abs_power(a: f64) -> Self {
        Transform { a, ..Self::new(PhiKind::AbsPower) }
    }

    pub const fn plus_power(a: f64) -> Self {
        Transform { a, ..Self::new(PhiKind::PlusPower) }
    }

    pub const fn affine_square(a: f64, b: f64) -> Self {
        Transform { a, b, ..Self::new(PhiKind::AffineSquare) }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PhiKind::Kink if !(self.tau >= 0.0 && self.tau.is_finite()) => {
                Err(Error::field("phi.tau", "kink needs a finite tau >= 0"))
            }
            PhiKind::AbsPower | PhiKind::PlusPower if !(self.a >= 1.0 && self.a.is_finite()) => {
                Err(Error::field("phi.a", "power transforms need a finite exponent a >= 1"))
            }
            PhiKind::AffineSquare if !(self.a.is_finite() && self.b.is_finite()) || self.a == 0.0 => {
                Err(Error::field("phi.a", "affine-square needs finite a != 0 and finite b"))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let t = match self.floor {
            Some(f) => t.max(f),
            None => t,
        };
        match self.kind {
            PhiKind::ZeroOne => {
                if t >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            PhiKind::Identity => t,
            PhiKind::Linear => 1.0 + t,
            PhiKind::Hinge => (1.0 + t).max(0.0),
            PhiKind::Modulus => (1.0 + t).abs(),
            PhiKind::Squared => (1.0 + t) * (1.0 + t),
            PhiKind::TruncatedSquare => {
                let h = (1.0 + t).max(0.0);
                h * h
            }
            PhiKind::Exponential => t.exp(),
            PhiKind::Logistic => {
                if t > 0.0 {
                    t + (-t).exp().ln_1p()
                } else {
                    t.exp().ln_1p()
                }
            }
            PhiKind::Sigmoid => 1.0 / (1.0 + (-t).exp()),
            PhiKind::Kink => (1.0 + t).max(0.0) + (t - self.tau).max(0.0),
            PhiKind::AbsPower => t.abs().powf(self.a) / self.a,
            PhiKind::PlusPower => t.max(0.0).powf(self.a) / self.a,
            PhiKind::AffineSquare => {
                let u = self.a * t + self.b;
                u * u
            }
        }
    }

    pub fn is_convex(&self) -> bool {
        !matches!(self.kind, PhiKind::ZeroOne | PhiKind::Sigmoid)
    }

    pub fn is_lower_bounded(&self) -> bool {
        !matches!(self.kind, PhiKind::Identity | PhiKind::Linear)
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.floor.is_some()
            || matches!(
                self.kind,
                PhiKind::ZeroOne
                    | PhiKind::Identity
                    | PhiKind::Linear
                    | PhiKind::Hinge
                    | PhiKind::TruncatedSquare
                    | PhiKind::Exponential
                    | PhiKind::Logistic
                    | PhiKind::Sigmoid
                    | PhiKind::Kink
                    | PhiKind::PlusPower
            )
    }

    /// Differentiable everywhere (used to decide which free-lunch checks are
    /// only conjectured).
    pub fn is_smooth(&self) -> bool {
        matches!(
            self.kind,
            PhiKind::Identity
                | PhiKind::Linear
                | PhiKind::Squared
                | PhiKind::TruncatedSquare
                | PhiKind::Exponential
                | PhiKind::Logistic
                | PhiKind::Sigmoid
                | PhiKind::AffineSquare
        ) || (matches!(self.kind, PhiKind::AbsPower | PhiKind::PlusPower) && self.a > 1.0)
    }

    /// sup{t : φ(t) ≤ φ(t') for all t'}; −∞ when the infimum is not attained.
    pub fn t_inf(&self) -> Result<f64> {
        if !self.is_convex() || !self.is_lower_bounded() {
            return Err(Error::Unsupported(format!(
                "{} is not convex and lower-bounded",
                self.kind
            )));
        }
        let base = match self.kind {
            PhiKind::Hinge
            | PhiKind::Modulus
            | PhiKind::Squared
            | PhiKind::TruncatedSquare
            | PhiKind::Kink => -1.0,
            PhiKind::Exponential | PhiKind::Logistic => f64::NEG_INFINITY,
            PhiKind::AbsPower | PhiKind::PlusPower => 0.0,
            PhiKind::AffineSquare => -self.b / self.a,
            _ => unreachable!(),
        };
        Ok(match self.floor {
            Some(f) => base.max(f),
            None => base,
        })
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            PhiKind::Kink => write!(f, "kink(tau={})", self.tau)?,
            PhiKind::AbsPower | PhiKind::PlusPower => write!(f, "{}(a={})", self.kind, self.a)?,
            PhiKind::AffineSquare => write!(f, "affine-square(a={},b={})", self.a, self.b)?,
            k => write!(f, "{k}")?,
        }
        if let Some(fl) = self.floor {
            write!(f, "[t>={fl}]")?;
        }
        Ok(())
    }
}

/// Lower-bounded, non-decreasing replacement σ for a convex φ.
///
/// Returns `(t_inf, σ)` with σ(t) = φ(max(t, t_inf)); for φ already
/// non-decreasing σ = φ.
pub fn effective_transform(phi: &Transform) -> Result<(f64, Transform)> {
    let t_inf = phi.t_inf()?;
    if phi.is_non_decreasing() {
        return Ok((t_inf, *phi));
    }
    Ok((t_inf, Transform { floor: Some(t_inf), ..*phi }))
}

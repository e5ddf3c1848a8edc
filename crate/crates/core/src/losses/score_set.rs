use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::{Error, Result};

pub const SUM_TOL: f64 = 1e-9;
pub const NONNEG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScoreSetKind {
    Full,
    SumToZero,
    Simplex,
    /// {s : Σ s = 0, s ≥ lower_bound}
    BoxedSumToZero,
    /// {s : s ≥ 0}
    Nonnegative,
}

impl ScoreSetKind {
    pub fn name(self) -> &'static str {
        match self {
            ScoreSetKind::Full => "full",
            ScoreSetKind::SumToZero => "sum-to-zero",
            ScoreSetKind::Simplex => "simplex",
            ScoreSetKind::BoxedSumToZero => "boxed-sum-to-zero",
            ScoreSetKind::Nonnegative => "nonnegative",
        }
    }
}

impl FromStr for ScoreSetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "full" => ScoreSetKind::Full,
            "sum-to-zero" => ScoreSetKind::SumToZero,
            "simplex" => ScoreSetKind::Simplex,
            "boxed-sum-to-zero" => ScoreSetKind::BoxedSumToZero,
            "nonnegative" => ScoreSetKind::Nonnegative,
            other => return Err(Error::field("score_set", format!("unknown score set `{other}`"))),
        })
    }
}

impl fmt::Display for ScoreSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSet {
    pub kind: ScoreSetKind,
    pub k: usize,
    /// Only used by [`ScoreSetKind::BoxedSumToZero`].
    pub lower_bound: f64,
}

impl ScoreSet {
    pub fn new(kind: ScoreSetKind, k: usize) -> Self {
        let lower_bound = if kind == ScoreSetKind::BoxedSumToZero { -1.0 } else { 0.0 };
        ScoreSet { kind, k, lower_bound }
    }

    pub fn full(k: usize) -> Self {
        Self::new(ScoreSetKind::Full, k)
    }

    pub fn sum_to_zero(k: usize) -> Self {
        Self::new(ScoreSetKind::SumToZero, k)
    }

    pub fn simplex(k: usize) -> Self {
        Self::new(ScoreSetKind::Simplex, k)
    }

    pub fn boxed(k: usize, lower_bound: f64) -> Self {
        ScoreSet { kind: ScoreSetKind::BoxedSumToZero, k, lower_bound }
    }

    pub fn nonnegative(k: usize) -> Self {
        Self::new(ScoreSetKind::Nonnegative, k)
    }

    pub fn with_classes(&self, k: usize) -> Self {
        ScoreSet { k, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::field("K", "need at least two classes"));
        }
        if self.kind == ScoreSetKind::BoxedSumToZero
            && !(self.lower_bound < 0.0 && self.lower_bound.is_finite())
        {
            return Err(Error::field("score_set.lower_bound", "must be finite and negative"));
        }
        Ok(())
    }

    /// Bounded sets need no artificial box.
    pub fn is_bounded(&self) -> bool {
        matches!(self.kind, ScoreSetKind::Simplex | ScoreSetKind::BoxedSumToZero)
    }

    pub fn has_sum_constraint(&self) -> bool {
        !matches!(self.kind, ScoreSetKind::Full | ScoreSetKind::Nonnegative)
    }

    pub fn center(&self) -> Vec<f64> {
        match self.kind {
            ScoreSetKind::Simplex => vec![1.0 / self.k as f64; self.k],
            ScoreSetKind::Nonnegative => vec![1.0; self.k],
            _ => vec![0.0; self.k],
        }
    }

    /// Checks membership; the error names the violated constraint.
    pub fn check(&self, s: &[f64]) -> Result<()> {
        if s.len() != self.k {
            return Err(Error::Domain(format!(
                "score vector has length {} but K = {}",
                s.len(),
                self.k
            )));
        }
        if s.iter().any(|v| v.is_nan()) {
            return Err(Error::Domain("score vector contains NaN".into()));
        }
        let sum: f64 = s.iter().sum();
        match self.kind {
            ScoreSetKind::Full => {}
            ScoreSetKind::SumToZero => {
                if sum.abs() > SUM_TOL {
                    return Err(Error::Domain(format!("sum-to-zero violated: sum = {sum}")));
                }
            }
            ScoreSetKind::Simplex => {
                if let Some(v) = s.iter().find(|v| **v < -NONNEG_TOL) {
                    return Err(Error::Domain(format!("simplex nonnegativity violated: {v}")));
                }
                if (sum - 1.0).abs() > SUM_TOL {
                    return Err(Error::Domain(format!("simplex sum violated: sum = {sum}")));
                }
            }
            ScoreSetKind::BoxedSumToZero => {
                if sum.abs() > SUM_TOL {
                    return Err(Error::Domain(format!("sum-to-zero violated: sum = {sum}")));
                }
                if let Some(v) = s.iter().find(|v| **v < self.lower_bound - NONNEG_TOL) {
                    return Err(Error::Domain(format!(
                        "lower bound {} violated: {v}",
                        self.lower_bound
                    )));
                }
            }
            ScoreSetKind::Nonnegative => {
                if let Some(v) = s.iter().find(|v| **v < -NONNEG_TOL) {
                    return Err(Error::Domain(format!("nonnegativity violated: {v}")));
                }
            }
        }
        Ok(())
    }

    /// A random point of the set, with coordinates `tie.0` and `tie.1` equal when given.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, tie: Option<(usize, usize)>) -> Vec<f64> {
        let k = self.k;
        let bounded = matches!(self.kind, ScoreSetKind::Simplex | ScoreSetKind::BoxedSumToZero);
        let mut s: Vec<f64> = if bounded {
            (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect()
        } else {
            (0..k).map(|_| rng.random_range(-3.0..3.0)).collect()
        };
        if let Some((a, b)) = tie {
            s[b] = s[a];
        }
        match self.kind {
            ScoreSetKind::Full => {}
            ScoreSetKind::SumToZero => {
                let m = s.iter().sum::<f64>() / k as f64;
                s.iter_mut().for_each(|v| *v -= m);
            }
            ScoreSetKind::Nonnegative => s.iter_mut().for_each(|v| *v = v.abs()),
            ScoreSetKind::Simplex | ScoreSetKind::BoxedSumToZero => {
                let t: f64 = s.iter().sum();
                s.iter_mut().for_each(|v| *v /= t);
                if self.kind == ScoreSetKind::BoxedSumToZero {
                    let lb = self.lower_bound;
                    s.iter_mut().for_each(|v| *v = lb - k as f64 * lb * *v);
                }
            }
        }
        s
    }

    pub fn contains(&self, s: &[f64]) -> bool {
        self.check(s).is_ok()
    }
}

impl fmt::Display for ScoreSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ScoreSetKind::BoxedSumToZero => write!(f, "{}(K={}, lb={})", self.kind, self.k, self.lower_bound),
            k => write!(f, "{k}(K={})", self.k),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn membership() {
        assert!(ScoreSet::sum_to_zero(3).contains(&[1.0, -0.5, -0.5]));
        assert!(!ScoreSet::sum_to_zero(3).contains(&[1.0, -0.5, -0.4]));
        assert!(ScoreSet::simplex(2).contains(&[0.3, 0.7]));
        assert!(!ScoreSet::simplex(2).contains(&[-0.1, 1.1]));
        assert!(ScoreSet::boxed(3, -1.0).contains(&[2.0, -1.0, -1.0]));
        assert!(!ScoreSet::boxed(3, -1.0).contains(&[3.0, -1.5, -1.5]));
        assert!(ScoreSet::full(2).contains(&[1e6, -3.0]));
        assert!(!ScoreSet::full(2).contains(&[1.0]));
        let err = ScoreSet::sum_to_zero(2).check(&[1.0, 1.0]).unwrap_err();
        assert!(err.to_string().contains("sum-to-zero"));
    }

    #[test]
    fn centers_are_members() {
        for kind in [
            ScoreSetKind::Full,
            ScoreSetKind::SumToZero,
            ScoreSetKind::Simplex,
            ScoreSetKind::BoxedSumToZero,
            ScoreSetKind::Nonnegative,
        ] {
            for k in 2..6 {
                let set = ScoreSet::new(kind, k);
                assert!(set.contains(&set.center()), "{set}");
            }
        }
    }
}

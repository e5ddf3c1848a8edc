use std::fmt;
use std::str::FromStr;

use super::score_set::{ScoreSet, ScoreSetKind};
use super::selector::Distribution;
use super::transform::{PhiKind, Transform};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Σ_{k≠y} φ(s_k − s_y)
    WW,
    /// max_{k≠y} φ(s_k − s_y)
    CS,
    /// Σ_{k≠y} φ(s_k) on sum-to-zero scores
    LLW,
    /// ψ(s_y) + F(Σ_k φ(s_k))
    Zhang,
    /// φ(−s_y) + Σ_{k≠y} φ(s_k) (one-vs-all; see [`RrkaSum`])
    RRKA,
    /// φ(−s_y) on sum-to-zero scores
    ZZH,
    /// (K − 2 − s_y)₊ on {s ∈ S₀ : s ≥ −1}
    Liu,
    /// F(Σ_{k≠y} φ(s_k − s_y))
    BSKV,
    /// −ln s_y on the simplex
    LR,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::WW => "WW",
            Family::CS => "CS",
            Family::LLW => "LLW",
            Family::Zhang => "Zhang",
            Family::RRKA => "RRKA",
            Family::ZZH => "ZZH",
            Family::Liu => "Liu",
            Family::BSKV => "BSKV",
            Family::LR => "LR",
        }
    }

    pub fn default_score_set(self) -> ScoreSetKind {
        match self {
            Family::WW | Family::CS | Family::Zhang | Family::RRKA | Family::BSKV => ScoreSetKind::Full,
            Family::LLW | Family::ZZH => ScoreSetKind::SumToZero,
            Family::Liu => ScoreSetKind::BoxedSumToZero,
            Family::LR => ScoreSetKind::Simplex,
        }
    }

    pub fn uses_phi(self) -> bool {
        !matches!(self, Family::Liu | Family::LR)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_uppercase().as_str() {
            "WW" => Family::WW,
            "CS" => Family::CS,
            "LLW" => Family::LLW,
            "ZHANG" => Family::Zhang,
            "RRKA" => Family::RRKA,
            "ZZH" => Family::ZZH,
            "LIU" => Family::Liu,
            "BSKV" => Family::BSKV,
            "LR" => Family::LR,
            _ => return Err(Error::field("family", format!("unknown loss family `{s}`"))),
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The per-class term ψ of the Zhang family. All kinds are non-increasing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Psi {
    /// −t
    NegIdentity,
    /// −ln t (t > 0)
    NegLog,
    /// −t^a / a (t ≥ 0)
    NegPower(f64),
}

impl Psi {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Psi::NegIdentity => -t,
            Psi::NegLog => {
                if t > 0.0 {
                    -t.ln()
                } else {
                    f64::INFINITY
                }
            }
            Psi::NegPower(a) => {
                if t >= 0.0 {
                    -t.powf(a) / a
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// Smallest t in the domain with ψ(t) ≤ v.
    pub fn level_inverse(&self, v: f64) -> f64 {
        match *self {
            Psi::NegIdentity => -v,
            Psi::NegLog => (-v).exp(),
            Psi::NegPower(a) => (-a * v).max(0.0).powf(1.0 / a),
        }
    }

    /// Whether ψ is finite only on t ≥ 0.
    pub fn needs_nonnegative(&self) -> bool {
        !matches!(self, Psi::NegIdentity)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Psi::NegIdentity => "neg-identity",
            Psi::NegLog => "neg-log",
            Psi::NegPower(_) => "neg-power",
        }
    }

    pub fn parse(kind: &str, a: Option<f64>) -> Result<Self> {
        match kind.trim().to_ascii_lowercase().as_str() {
            "neg-identity" | "-t" => Ok(Psi::NegIdentity),
            "neg-log" | "-ln" => Ok(Psi::NegLog),
            "neg-power" => {
                let a = a.ok_or_else(|| Error::field("psi.a", "neg-power needs an exponent"))?;
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::field("psi.a", "exponent must lie in (0, 1)"));
                }
                Ok(Psi::NegPower(a))
            }
            other => Err(Error::field("psi_kind", format!("unknown psi `{other}`"))),
        }
    }
}

/// The outer function F applied to Σφ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outer {
    Identity,
    Log,
    /// F ≡ 0
    None,
}

impl Outer {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Outer::Identity => x,
            Outer::Log => x.ln(),
            Outer::None => 0.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Outer::Identity => "identity",
            Outer::Log => "log",
            Outer::None => "none",
        }
    }
}

impl FromStr for Outer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "identity" | "id" => Outer::Identity,
            "log" | "ln" => Outer::Log,
            "none" | "zero" => Outer::None,
            other => return Err(Error::field("F_kind", format!("unknown F `{other}`"))),
        })
    }
}

/// Which classes the second sum of RRKA runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RrkaSum {
    /// Σ_{k≠y} φ(s_k)
    OneVsAll,
    /// Σ_{k=1..K} φ(s_k)
    All,
}

/// The adjustment function l(s) used by the pseudo-risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjustment {
    /// Family default: F(Σφ) for Zhang, Σφ for LLW and RRKA, 0 otherwise.
    Natural,
    Zero,
    SumPhi,
    OuterSumPhi,
}

/// Anything that maps (scores, class) to a loss value.
pub trait Surrogate {
    /// Short human-readable name used in reports.
    fn label(&self) -> String {
        "surrogate".to_string()
    }
    fn classes(&self) -> usize;
    fn score_set(&self) -> ScoreSet;
    /// Unchecked evaluation; may return +∞.
    fn loss(&self, s: &[f64], y: usize) -> f64;

    /// Σ_y p_y L(s, y), skipping classes with p_y = 0.
    fn risk(&self, s: &[f64], p: &[f64]) -> f64 {
        let mut r = 0.0;
        for (y, &py) in p.iter().enumerate() {
            if py != 0.0 {
                r += py * self.loss(s, y);
            }
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    pub family: Family,
    pub phi: Transform,
    pub psi: Psi,
    pub outer: Outer,
    pub score_set: ScoreSet,
    pub rrka_sum: RrkaSum,
}

impl LossSpec {
    fn base(family: Family, phi: Transform, k: usize) -> Self {
        LossSpec {
            family,
            phi,
            psi: Psi::NegIdentity,
            outer: Outer::Identity,
            score_set: ScoreSet::new(family.default_score_set(), k),
            rrka_sum: RrkaSum::OneVsAll,
        }
    }

    pub fn ww(phi: Transform, k: usize) -> Self {
        Self::base(Family::WW, phi, k)
    }

    pub fn cs(phi: Transform, k: usize) -> Self {
        Self::base(Family::CS, phi, k)
    }

    pub fn llw(phi: Transform, k: usize) -> Self {
        Self::base(Family::LLW, phi, k)
    }

    pub fn rrka(phi: Transform, k: usize) -> Self {
        Self::base(Family::RRKA, phi, k)
    }

    pub fn zzh(phi: Transform, k: usize) -> Self {
        Self::base(Family::ZZH, phi, k)
    }

    pub fn liu(k: usize) -> Self {
        Self::base(Family::Liu, Transform::hinge(), k)
    }

    pub fn lr(k: usize) -> Self {
        Self::base(Family::LR, Transform::hinge(), k)
    }

    pub fn bskv(phi: Transform, outer: Outer, k: usize) -> Self {
        LossSpec { outer, ..Self::base(Family::BSKV, phi, k) }
    }

    /// Zhang family; ψ kinds only finite on t ≥ 0 get the nonnegative orthant.
    pub fn zhang(psi: Psi, phi: Transform, outer: Outer, k: usize) -> Self {
        let kind = if psi.needs_nonnegative() { ScoreSetKind::Nonnegative } else { ScoreSetKind::Full };
        LossSpec {
            psi,
            outer,
            score_set: ScoreSet::new(kind, k),
            ..Self::base(Family::Zhang, phi, k)
        }
    }

    /// Softmax cross-entropy: Zhang with ψ = −t, F = ln, φ = exp.
    pub fn coupled_logistic(k: usize) -> Self {
        Self::zhang(Psi::NegIdentity, Transform::exponential(), Outer::Log, k)
    }

    pub fn with_rrka_sum(mut self, sum: RrkaSum) -> Self {
        self.rrka_sum = sum;
        self
    }

    pub fn with_score_set(mut self, set: ScoreSet) -> Result<Self> {
        self.score_set = set;
        self.validate()?;
        Ok(self)
    }

    /// The same loss on `k` classes (the binary instance for `k = 2`).
    pub fn with_classes(&self, k: usize) -> Self {
        LossSpec { score_set: self.score_set.with_classes(k), ..*self }
    }

    pub fn k(&self) -> usize {
        self.score_set.k
    }

    pub fn validate(&self) -> Result<()> {
        self.score_set.validate()?;
        if self.family.uses_phi() {
            self.phi.validate()?;
        }
        let kind = self.score_set.kind;
        let ok = match self.family {
            Family::Zhang => {
                kind == ScoreSetKind::Nonnegative
                    || (kind == ScoreSetKind::Full && !self.psi.needs_nonnegative())
            }
            f => kind == f.default_score_set(),
        };
        if !ok {
            return Err(Error::field(
                "score_set",
                format!("{} is not paired with score set {}", self.family, kind),
            ));
        }
        if self.family == Family::BSKV && self.outer == Outer::None {
            return Err(Error::field("F_kind", "BSKV needs a strictly increasing F"));
        }
        Ok(())
    }

    fn check_args(&self, s: &[f64], y: usize) -> Result<()> {
        self.score_set.check(s)?;
        if y >= self.k() {
            return Err(Error::Domain(format!("class {y} out of range for K = {}", self.k())));
        }
        Ok(())
    }

    /// Checked loss evaluation. LR returns +∞ at s_y = 0.
    pub fn eval_loss(&self, s: &[f64], y: usize) -> Result<f64> {
        self.check_args(s, y)?;
        Ok(self.loss(s, y))
    }

    pub fn pointwise_risk(&self, s: &[f64], p: &Distribution) -> Result<f64> {
        self.score_set.check(s)?;
        if p.k() != self.k() {
            return Err(Error::Domain(format!("distribution has {} classes, loss has {}", p.k(), self.k())));
        }
        Ok(self.risk(s, p.as_slice()))
    }

    fn sum_phi(&self, s: &[f64]) -> f64 {
        s.iter().map(|&v| self.phi.eval(v)).sum()
    }

    /// F(Σφ(s_k)); log of a sum of exponentials is shifted by the max so it
    /// stays finite far from the origin.
    fn outer_sum_phi(&self, s: &[f64]) -> f64 {
        if self.outer == Outer::Log && self.phi.kind == PhiKind::Exponential && self.phi.floor.is_none() {
            let m = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if m.is_finite() {
                return m + s.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
            }
        }
        self.outer.eval(self.sum_phi(s))
    }

    pub fn adjustment_value(&self, adj: Adjustment, s: &[f64]) -> f64 {
        let adj = match adj {
            Adjustment::Natural => match self.family {
                Family::Zhang => Adjustment::OuterSumPhi,
                Family::LLW | Family::RRKA => Adjustment::SumPhi,
                _ => Adjustment::Zero,
            },
            a => a,
        };
        match adj {
            Adjustment::Zero | Adjustment::Natural => 0.0,
            Adjustment::SumPhi => self.sum_phi(s),
            Adjustment::OuterSumPhi => self.outer_sum_phi(s),
        }
    }

    /// Unchecked pseudo-risk l(s) + Σ_k w_k (L(s,k) − l(s)); terms with w_k = 0
    /// are skipped. Works for any s where the formula makes sense.
    pub fn pseudo(&self, adj: Adjustment, s: &[f64], w: &[f64]) -> f64 {
        let l = self.adjustment_value(adj, s);
        let mut r = l;
        for (k, &wk) in w.iter().enumerate() {
            if wk != 0.0 {
                r += wk * (self.loss(s, k) - l);
            }
        }
        r
    }

    pub fn pseudo_risk(&self, adj: Adjustment, s: &[f64], w: &[f64]) -> Result<f64> {
        self.score_set.check(s)?;
        if w.len() != self.k() {
            return Err(Error::Domain(format!("weight vector has {} entries, K = {}", w.len(), self.k())));
        }
        if let Some(v) = w.iter().find(|v| !(**v >= 0.0)) {
            return Err(Error::Domain(format!("negative pseudo-risk weight {v}")));
        }
        Ok(self.pseudo(adj, s, w))
    }

    /// Whether s ↦ L(s, y) is convex for every y.
    pub fn is_convex(&self) -> bool {
        match self.family {
            Family::Liu | Family::LR => true,
            Family::BSKV | Family::Zhang => match self.outer {
                Outer::Identity => self.phi.is_convex(),
                Outer::Log => self.phi.kind == PhiKind::Exponential,
                Outer::None => true,
            },
            _ => self.phi.is_convex(),
        }
    }
}

impl Surrogate for LossSpec {
    fn label(&self) -> String {
        self.to_string()
    }

    fn classes(&self) -> usize {
        self.k()
    }

    fn score_set(&self) -> ScoreSet {
        self.score_set
    }

    fn loss(&self, s: &[f64], y: usize) -> f64 {
        let phi = &self.phi;
        let k = s.len();
        match self.family {
            Family::WW => (0..k).filter(|&j| j != y).map(|j| phi.eval(s[j] - s[y])).sum(),
            Family::CS => (0..k)
                .filter(|&j| j != y)
                .map(|j| phi.eval(s[j] - s[y]))
                .fold(f64::NEG_INFINITY, f64::max),
            Family::LLW => (0..k).filter(|&j| j != y).map(|j| phi.eval(s[j])).sum(),
            Family::Zhang => self.psi.eval(s[y]) + self.outer_sum_phi(s),
            Family::RRKA => {
                let rest: f64 = match self.rrka_sum {
                    RrkaSum::OneVsAll => (0..k).filter(|&j| j != y).map(|j| phi.eval(s[j])).sum(),
                    RrkaSum::All => self.sum_phi(s),
                };
                phi.eval(-s[y]) + rest
            }
            Family::ZZH => phi.eval(-s[y]),
            Family::Liu => (k as f64 - 2.0 - s[y]).max(0.0),
            Family::BSKV => {
                let inner: f64 = (0..k).filter(|&j| j != y).map(|j| phi.eval(s[j] - s[y])).sum();
                self.outer.eval(inner)
            }
            Family::LR => {
                if s[y] > 0.0 {
                    -s[y].ln()
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)?;
        match self.family {
            Family::Zhang => write!(f, "[psi={}, phi={}, F={}]", self.psi.name(), self.phi, self.outer.name())?,
            Family::BSKV => write!(f, "[phi={}, F={}]", self.phi, self.outer.name())?,
            Family::RRKA if self.rrka_sum == RrkaSum::All => write!(f, "[phi={}, sum=all]", self.phi)?,
            fam if fam.uses_phi() => write!(f, "[phi={}]", self.phi)?,
            _ => {}
        }
        write!(f, " K={}", self.k())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn table_losses_by_hand() {
        let llw = LossSpec::llw(Transform::hinge(), 3);
        assert_eq!(llw.eval_loss(&[0.0, 0.0, 0.0], 0).unwrap(), 2.0);
        assert_eq!(llw.eval_loss(&[1.0, -0.5, -0.5], 1).unwrap(), 2.5);

        let liu = LossSpec::liu(3);
        assert_eq!(liu.eval_loss(&[2.0, -1.0, -1.0], 0).unwrap(), 0.0);
        assert_eq!(liu.eval_loss(&[2.0, -1.0, -1.0], 1).unwrap(), 2.0);

        let lr = LossSpec::lr(2);
        assert!(close(lr.eval_loss(&[0.5, 0.5], 0).unwrap(), 2f64.ln()));
        assert_eq!(lr.eval_loss(&[1.0, 0.0], 1).unwrap(), f64::INFINITY);

        let ww = LossSpec::ww(Transform::hinge(), 3);
        // (1 + 0.5 − 1)₊ + (1 − 1 − 1)₊
        assert!(close(ww.eval_loss(&[1.0, 0.5, -1.0], 0).unwrap(), 0.5));
        let cs = LossSpec::cs(Transform::hinge(), 3);
        assert!(close(cs.eval_loss(&[1.0, 0.5, -1.0], 2).unwrap(), 3.0));

        let zhang = LossSpec::zhang(Psi::NegIdentity, Transform::exponential(), Outer::Identity, 2);
        assert!(close(zhang.eval_loss(&[0.0, 0.0], 0).unwrap(), 2.0));

        let bskv = LossSpec::bskv(Transform::exponential(), Outer::Log, 3);
        let v = bskv.eval_loss(&[0.0, 1.0, 2.0], 0).unwrap();
        assert!(close(v, (1f64.exp() + 2f64.exp()).ln()));

        let zzh = LossSpec::zzh(Transform::hinge(), 2);
        assert_eq!(zzh.eval_loss(&[0.3, -0.3], 0).unwrap(), 0.7);
    }

    #[test]
    fn rrka_variants() {
        let s = [0.0; 3];
        let p = Distribution::uniform(3);
        let full = LossSpec::rrka(Transform::squared(), 3).with_rrka_sum(RrkaSum::All);
        assert!(close(full.pointwise_risk(&s, &p).unwrap(), 4.0));
        let ova = LossSpec::rrka(Transform::squared(), 3);
        assert!(close(ova.pointwise_risk(&s, &p).unwrap(), 3.0));
    }

    #[test]
    fn risk_examples() {
        let zzh = LossSpec::zzh(Transform::hinge(), 2);
        let half = Distribution::uniform(2);
        assert_eq!(zzh.pointwise_risk(&[0.0, 0.0], &half).unwrap(), 1.0);
        let llw = LossSpec::llw(Transform::hinge(), 2);
        let one = Distribution::new(vec![1.0, 0.0]).unwrap();
        for t in [-2.0, -0.5, 0.0, 0.7, 3.0] {
            let r = llw.pointwise_risk(&[t, -t], &one).unwrap();
            assert!(close(r, (1.0f64 - t).max(0.0)));
        }
    }

    #[test]
    fn pseudo_risk_examples() {
        let llw = LossSpec::llw(Transform::hinge(), 2);
        let v = llw.pseudo_risk(Adjustment::Natural, &[0.0, 0.0], &[0.3, 0.3]).unwrap();
        assert!(close(v, 1.4));
        let z = LossSpec::zhang(Psi::NegIdentity, Transform::exponential(), Outer::Identity, 2);
        let v = z.pseudo_risk(Adjustment::Natural, &[0.0, 0.0], &[0.5, 0.5]).unwrap();
        assert!(close(v, 2.0));
        assert!(llw.pseudo_risk(Adjustment::Natural, &[0.0, 0.0], &[-0.1, 0.3]).is_err());
    }

    #[test]
    fn membership_errors_name_the_constraint() {
        let llw = LossSpec::llw(Transform::hinge(), 3);
        let e = llw.eval_loss(&[1.0, 1.0, 1.0], 0).unwrap_err();
        assert!(e.to_string().contains("sum-to-zero"));
        assert!(llw.eval_loss(&[0.0, 0.0, 0.0], 3).is_err());
    }

    #[test]
    fn pairing_is_enforced() {
        let bad = LossSpec::llw(Transform::hinge(), 3).with_score_set(ScoreSet::full(3));
        assert!(bad.is_err());
        let bad = LossSpec::zhang(Psi::NegLog, Transform::new(PhiKind::Identity), Outer::Identity, 2)
            .with_score_set(ScoreSet::full(2));
        assert!(bad.is_err());
        assert!(LossSpec::lr(3).validate().is_ok());
        assert!(LossSpec::liu(4).validate().is_ok());
    }

    #[test]
    fn psi_level_inverse() {
        for psi in [Psi::NegIdentity, Psi::NegLog, Psi::NegPower(0.5), Psi::NegPower(0.75)] {
            for v in [-3.0, -1.0, -0.2] {
                let t = psi.level_inverse(v);
                assert!((psi.eval(t) - v).abs() < 1e-12, "{psi:?} {v}");
            }
        }
    }

    #[test]
    fn coupled_logistic_far_from_origin() {
        let l = LossSpec::coupled_logistic(3);
        // the loss only depends on differences of scores
        let v = l.loss(&[-1e6, -1e6, -1e6], 0);
        assert!((v - 3f64.ln()).abs() < 1e-9, "{v}");
        assert!(close(l.loss(&[800.0, 0.0, 0.0], 0), 0.0));
    }
}

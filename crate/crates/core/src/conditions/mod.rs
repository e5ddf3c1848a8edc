//! Numerical audits of the reduction conditions and assumptions behind the
//! δ_max ≥ δ_binary lower bounds. A passing verdict means "no violation on
//! the sampled grid", never a proof.

mod reduction;
mod structural;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::losses::{Adjustment, Family, LossSpec, ScoreSetKind};
use crate::optimize::OptimizerSettings;
use crate::{Error, Result};

pub use reduction::{
    c1_margin, c2_margin, c34_margin, c6_margin, c7_margin, check_condition_1, check_condition_2,
    check_condition_3_4, check_condition_6_7, check_zhang_inf, pair_grid, theta_problem, zhang_inf_margin, Zeta,
};
pub use structural::{
    check_lower_bounded, check_order_preservation, check_swapping_averaging, check_symmetry, order_margin,
    symmetry_margin,
};

/// Dirichlet(1) sample, optionally with one coordinate zeroed.
pub(crate) fn random_distribution(rng: &mut ChaCha8Rng, k: usize, allow_zero: bool) -> Vec<f64> {
    let mut p: Vec<f64> = (0..k).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    if allow_zero {
        p[rng.random_range(0..k)] = 0.0;
    }
    let t: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= t);
    p
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConditionId {
    C1,
    C2,
    C3,
    C4,
    #[serde(rename = "C5-symmetry")]
    Symmetry,
    #[serde(rename = "C6-pairing-sum-to-zero")]
    PairingSumToZero,
    #[serde(rename = "C7-free-lunch")]
    FreeLunch,
    ZhangInf,
    #[serde(rename = "A2-lower-bounded")]
    LowerBounded,
    #[serde(rename = "A5-swapping")]
    Swapping,
    #[serde(rename = "A6-averaging")]
    Averaging,
    #[serde(rename = "order-preservation")]
    OrderPreservation,
    #[serde(rename = "conjecture-1-probe")]
    Conjecture1Probe,
}

impl ConditionId {
    pub const ALL: [ConditionId; 13] = [
        ConditionId::C1,
        ConditionId::C2,
        ConditionId::C3,
        ConditionId::C4,
        ConditionId::Symmetry,
        ConditionId::PairingSumToZero,
        ConditionId::FreeLunch,
        ConditionId::ZhangInf,
        ConditionId::LowerBounded,
        ConditionId::Swapping,
        ConditionId::Averaging,
        ConditionId::OrderPreservation,
        ConditionId::Conjecture1Probe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConditionId::C1 => "C1",
            ConditionId::C2 => "C2",
            ConditionId::C3 => "C3",
            ConditionId::C4 => "C4",
            ConditionId::Symmetry => "C5-symmetry",
            ConditionId::PairingSumToZero => "C6-pairing-sum-to-zero",
            ConditionId::FreeLunch => "C7-free-lunch",
            ConditionId::ZhangInf => "ZhangInf",
            ConditionId::LowerBounded => "A2-lower-bounded",
            ConditionId::Swapping => "A5-swapping",
            ConditionId::Averaging => "A6-averaging",
            ConditionId::OrderPreservation => "order-preservation",
            ConditionId::Conjecture1Probe => "conjecture-1-probe",
        }
    }
}

impl FromStr for ConditionId {
    type Err = Error;

    /// Accepts the report name or its short prefix (`C5`, `A2`, `order`, …).
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        ConditionId::ALL
            .into_iter()
            .find(|id| {
                let n = id.name().to_ascii_lowercase();
                n == t || n.split('-').next() == Some(t.as_str())
            })
            .ok_or_else(|| Error::field("conditions", format!("unknown condition `{s}`")))
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    HoldsOnSamples,
    Violated,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::HoldsOnSamples => "holds-on-samples",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// The sample realising the worst margin. Only the fields relevant to the
/// condition are set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Witness {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Class pair (i, j).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<(usize, usize)>,
    /// Binary weights (p₁, p₂).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perm: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lhs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rhs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridInfo {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_step: Option<f64>,
}

mod ext_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&v.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => s.parse::<f64>().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition_id: ConditionId,
    pub loss: String,
    pub verdict: Verdict,
    /// Worst signed slack over the samples; violated ⇒ margin < −tolerance.
    #[serde(with = "ext_real")]
    pub margin: f64,
    pub witness: Option<Witness>,
    pub samples: usize,
    /// Samples whose evaluation failed (optimizer error, unbounded risk).
    pub failures: usize,
    pub tolerance: f64,
    pub grids: GridInfo,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn holds(&self) -> bool {
        self.verdict == Verdict::HoldsOnSamples
    }

    pub fn violated(&self) -> bool {
        self.verdict == Verdict::Violated
    }
}

/// Accumulates per-sample margins into a report.
pub(crate) struct Tally {
    worst: Option<(f64, Witness)>,
    samples: usize,
    failures: usize,
    undecided: usize,
    notes: Vec<String>,
}

impl Tally {
    pub(crate) fn new() -> Self {
        Tally { worst: None, samples: 0, failures: 0, undecided: 0, notes: Vec::new() }
    }

    pub(crate) fn record(&mut self, margin: f64, witness: Witness) {
        self.samples += 1;
        if self.worst.as_ref().is_none_or(|(m, _)| margin < *m) {
            self.worst = Some((margin, witness));
        }
    }

    pub(crate) fn fail(&mut self, err: &Error) {
        self.samples += 1;
        self.failures += 1;
        if self.notes.len() < 3 {
            self.notes.push(format!("sample failed: {err}"));
        }
    }

    /// A sample that neither confirms nor refutes the condition.
    pub(crate) fn undecided(&mut self, margin: f64, witness: Witness, why: &str) {
        self.undecided += 1;
        if self.undecided == 1 {
            self.notes.push(why.to_string());
        }
        self.record(margin, witness);
    }

    pub(crate) fn finish(self, id: ConditionId, loss: String, tol: f64, grids: GridInfo, seed: u64) -> ConditionReport {
        let (margin, witness) = match self.worst {
            Some((m, w)) => (m, Some(w)),
            None => (0.0, None),
        };
        let verdict = if margin < -tol {
            Verdict::Violated
        } else if self.failures > 0 || self.undecided > 0 || witness.is_none() {
            Verdict::Inconclusive
        } else {
            Verdict::HoldsOnSamples
        };
        ConditionReport {
            condition_id: id,
            loss,
            verdict,
            margin,
            witness,
            samples: self.samples,
            failures: self.failures,
            tolerance: tol,
            grids,
            seed,
            notes: self.notes,
        }
    }
}

/// Grids and tolerances for a full audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub eps_grid: Vec<f64>,
    /// Simplex resolution; `None` picks 20 for K ≤ 3 and 10 for K = 4.
    pub resolution: Option<usize>,
    pub pair_step: f64,
    pub tol: f64,
    /// Random samples for the symmetry and set-membership checks.
    pub samples: usize,
    /// Random (i, j, p) triples for the pairing conditions.
    pub pairing_samples: usize,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            eps_grid: vec![0.1, 0.25, 0.5, 0.75, 0.9],
            resolution: None,
            pair_step: 0.05,
            tol: 1e-4,
            samples: 1000,
            pairing_samples: 24,
            seed: 0,
        }
    }
}

impl AuditConfig {
    pub fn resolution_for(&self, k: usize) -> usize {
        self.resolution.unwrap_or(if k >= 4 { 10 } else { 20 })
    }
}

/// Runs every check that applies to `loss`. Checks whose preconditions do
/// not hold are skipped; a loss that is not lower-bounded only gets the
/// structural checks.
pub fn audit(loss: &LossSpec, cfg: &AuditConfig, settings: &OptimizerSettings) -> Result<Vec<ConditionReport>> {
    audit_only(loss, cfg, settings, &ConditionId::ALL)
}

/// [`audit`] restricted to the listed conditions. The lower-boundedness check
/// always runs because the reduction checks depend on it, but it is only
/// reported when listed. C6 and C7 are computed together, as are C7 and the
/// conjecture probe that replaces it.
pub fn audit_only(
    loss: &LossSpec,
    cfg: &AuditConfig,
    settings: &OptimizerSettings,
    only: &[ConditionId],
) -> Result<Vec<ConditionReport>> {
    use ConditionId as C;
    loss.validate()?;
    let want = |ids: &[ConditionId]| ids.iter().any(|id| only.contains(id));
    let mut out = Vec::new();
    let lower = check_lower_bounded(loss, settings)?;
    let bounded = !lower.violated();
    if want(&[C::LowerBounded]) {
        out.push(lower);
    }
    if want(&[C::Symmetry]) {
        out.push(check_symmetry(loss, cfg.samples, cfg.seed, 1e-9)?);
    }
    if want(&[C::Swapping, C::Averaging]) {
        let (swap, avg) = check_swapping_averaging(&loss.score_set, cfg.samples, cfg.seed)?;
        out.extend([swap, avg].into_iter().filter(|r| only.contains(&r.condition_id)));
    }
    if !bounded {
        return Ok(out);
    }
    if loss.k() <= 4 && want(&[C::C1]) {
        out.push(check_condition_1(loss, &cfg.eps_grid, cfg.resolution_for(loss.k()), settings, cfg.tol)?);
    }
    if loss.k() <= 4 && want(&[C::C2]) {
        out.push(check_condition_2(loss, Adjustment::Natural, cfg.pairing_samples, cfg.seed, settings, cfg.tol)?);
    }
    if want(&[C::C4]) {
        out.push(check_condition_3_4(loss, Adjustment::Natural, Zeta::DeltaBinary, cfg.pair_step, settings, cfg.tol)?);
    }
    let zhang_like = (loss.family == Family::Zhang && loss.outer == crate::losses::Outer::Identity) || loss.family == Family::LR;
    if zhang_like && want(&[C::ZhangInf]) {
        out.push(check_zhang_inf(loss, cfg.pair_step, settings, cfg.tol)?);
    }
    if loss.score_set.kind == ScoreSetKind::SumToZero && want(&[C::PairingSumToZero, C::FreeLunch, C::Conjecture1Probe]) {
        let (c6, c7) = check_condition_6_7(loss, Adjustment::Natural, cfg.pair_step, cfg.pairing_samples, cfg.seed, settings, cfg.tol)?;
        if want(&[C::PairingSumToZero]) {
            out.push(c6);
        }
        if want(&[C::FreeLunch, C::Conjecture1Probe]) {
            out.push(c7);
        }
    }
    if loss.k() <= 4 && want(&[C::OrderPreservation]) {
        out.push(check_order_preservation(loss, cfg.resolution_for(loss.k()).min(10), settings, cfg.tol)?);
    }
    Ok(out)
}

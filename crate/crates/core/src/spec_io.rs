//! Flat key-value JSON for loss specifications, plus the ERM problem file.
//!
//! Loss keys: `family`, `K`, `phi.kind`, `phi.tau`, `phi.a`, `phi.b`,
//! `psi_kind`, `psi.a`, `F_kind`, `score_set`, `score_set.lower_bound`,
//! `rrka.sum`. Unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use crate::experiments::SyntheticProblem;
use crate::losses::{Family, LossSpec, Outer, PhiKind, Psi, RrkaSum, ScoreSet, ScoreSetKind, Transform};
use crate::{Error, Result};

pub const LOSS_KEYS: [&str; 12] = [
    "family",
    "K",
    "phi.kind",
    "phi.tau",
    "phi.a",
    "phi.b",
    "psi_kind",
    "psi.a",
    "F_kind",
    "score_set",
    "score_set.lower_bound",
    "rrka.sum",
];

struct Fields(Map<String, Value>);

impl Fields {
    fn str(&self, key: &str) -> Result<Option<&str>> {
        match self.0.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(Error::field(key, "expected a string")),
        }
    }

    fn num(&self, key: &str) -> Result<Option<f64>> {
        match self.0.get(key) {
            None | Some(Value::Null) => Ok(None),
            Some(v) => v.as_f64().map(Some).ok_or_else(|| Error::field(key, "expected a number")),
        }
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.str(key)?.ok_or_else(|| Error::field(key, "missing"))
    }
}

fn relabel(key: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Field { .. } => e,
        other => Error::field(key, other.to_string()),
    }
}

/// Parses a loss from its flat JSON form and validates it.
pub fn loss_from_json(text: &str) -> Result<LossSpec> {
    let map: Map<String, Value> = serde_json::from_str(text).map_err(|e| Error::field("<document>", e.to_string()))?;
    if let Some(bad) = map.keys().find(|k| !LOSS_KEYS.contains(&k.as_str())) {
        return Err(Error::field(bad, "unknown key"));
    }
    let f = Fields(map);
    let family: Family = f.required("family")?.parse().map_err(relabel("family"))?;
    let k = match f.0.get("K") {
        Some(v) => v.as_u64().filter(|&k| k >= 2).ok_or_else(|| Error::field("K", "expected an integer ≥ 2"))? as usize,
        None => return Err(Error::field("K", "missing")),
    };
    let phi = match f.str("phi.kind")? {
        Some(kind) => {
            let kind: PhiKind = kind.parse().map_err(relabel("phi.kind"))?;
            let mut phi = Transform::new(kind);
            if let Some(t) = f.num("phi.tau")? {
                phi.tau = t;
            }
            if let Some(a) = f.num("phi.a")? {
                phi.a = a;
            }
            if let Some(b) = f.num("phi.b")? {
                phi.b = b;
            }
            phi
        }
        None if family.uses_phi() => return Err(Error::field("phi.kind", "missing")),
        None => Transform::hinge(),
    };
    let outer = match f.str("F_kind")? {
        Some(s) if matches!(family, Family::Zhang | Family::BSKV) => s.parse::<Outer>().map_err(relabel("F_kind"))?,
        Some(_) => return Err(Error::field("F_kind", format!("{family} has no outer function"))),
        None => Outer::Identity,
    };
    if family != Family::Zhang && (f.0.contains_key("psi_kind") || f.0.contains_key("psi.a")) {
        return Err(Error::field("psi_kind", format!("{family} has no psi")));
    }
    let mut loss = match family {
        Family::WW => LossSpec::ww(phi, k),
        Family::CS => LossSpec::cs(phi, k),
        Family::LLW => LossSpec::llw(phi, k),
        Family::RRKA => LossSpec::rrka(phi, k),
        Family::ZZH => LossSpec::zzh(phi, k),
        Family::Liu => LossSpec::liu(k),
        Family::LR => LossSpec::lr(k),
        Family::BSKV => LossSpec::bskv(phi, outer, k),
        Family::Zhang => {
            let psi = Psi::parse(f.str("psi_kind")?.unwrap_or("neg-identity"), f.num("psi.a")?)?;
            LossSpec::zhang(psi, phi, outer, k)
        }
    };
    match f.str("rrka.sum")? {
        Some(_) if family != Family::RRKA => return Err(Error::field("rrka.sum", "only applies to RRKA")),
        Some("one-vs-all") => loss = loss.with_rrka_sum(RrkaSum::OneVsAll),
        Some("all") => loss = loss.with_rrka_sum(RrkaSum::All),
        Some(other) => return Err(Error::field("rrka.sum", format!("expected `one-vs-all` or `all`, got `{other}`"))),
        None => {}
    }
    let lb = f.num("score_set.lower_bound")?;
    if let Some(kind) = f.str("score_set")? {
        let kind: ScoreSetKind = kind.parse().map_err(relabel("score_set"))?;
        let set = match kind {
            ScoreSetKind::BoxedSumToZero => ScoreSet::boxed(k, lb.unwrap_or(loss.score_set.lower_bound)),
            _ if lb.is_some() => return Err(Error::field("score_set.lower_bound", "only applies to boxed-sum-to-zero")),
            kind => ScoreSet::new(kind, k),
        };
        loss = loss.with_score_set(set)?;
    } else if let Some(lb) = lb {
        if loss.score_set.kind != ScoreSetKind::BoxedSumToZero {
            return Err(Error::field("score_set.lower_bound", "only applies to boxed-sum-to-zero"));
        }
        loss = loss.with_score_set(ScoreSet::boxed(k, lb))?;
    }
    loss.validate()?;
    Ok(loss)
}

/// The flat JSON form read by [`loss_from_json`].
pub fn loss_to_json(loss: &LossSpec) -> String {
    let mut m = Map::new();
    m.insert("family".into(), loss.family.name().into());
    m.insert("K".into(), loss.k().into());
    if loss.family.uses_phi() {
        m.insert("phi.kind".into(), loss.phi.kind.name().into());
        match loss.phi.kind {
            PhiKind::Kink => {
                m.insert("phi.tau".into(), loss.phi.tau.into());
            }
            PhiKind::AbsPower | PhiKind::PlusPower => {
                m.insert("phi.a".into(), loss.phi.a.into());
            }
            PhiKind::AffineSquare => {
                m.insert("phi.a".into(), loss.phi.a.into());
                m.insert("phi.b".into(), loss.phi.b.into());
            }
            _ => {}
        }
    }
    if loss.family == Family::Zhang {
        m.insert("psi_kind".into(), loss.psi.name().into());
        if let Psi::NegPower(a) = loss.psi {
            m.insert("psi.a".into(), a.into());
        }
    }
    if matches!(loss.family, Family::Zhang | Family::BSKV) {
        m.insert("F_kind".into(), loss.outer.name().into());
    }
    m.insert("score_set".into(), loss.score_set.kind.name().into());
    if loss.score_set.kind == ScoreSetKind::BoxedSumToZero {
        m.insert("score_set.lower_bound".into(), loss.score_set.lower_bound.into());
    }
    if loss.family == Family::RRKA {
        let s = if loss.rrka_sum == RrkaSum::All { "all" } else { "one-vs-all" };
        m.insert("rrka.sum".into(), s.into());
    }
    serde_json::to_string_pretty(&Value::Object(m)).expect("plain JSON values")
}

pub fn read_loss(path: &Path) -> Result<LossSpec> {
    loss_from_json(&fs::read_to_string(path)?)
}

pub fn problem_from_json(text: &str) -> Result<SyntheticProblem> {
    let p: SyntheticProblem = serde_json::from_str(text).map_err(|e| Error::field("problem", e.to_string()))?;
    p.validate()?;
    Ok(p)
}

pub fn read_problem(path: &Path) -> Result<SyntheticProblem> {
    problem_from_json(&fs::read_to_string(path)?)
}

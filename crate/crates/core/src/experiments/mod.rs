//! Desk-scale reproductions with pass/fail assertions and CSV artifacts.

mod erm;
mod kink;
mod logistic;
mod table2;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use erm::{default_erm_curve, erm_records, simulate_erm, ErmRecord, SyntheticProblem};
pub use kink::{kink_counterexample, KINK_DISTRIBUTIONS};
pub use logistic::logistic_equivalence;
pub use table2::{reproduce_table2, TABLE2_CALIBRATED, TABLE2_NOT_CALIBRATED};

/// Scores within this distance of the maximum count as tied when reading off
/// the selected class of a numerically computed minimiser.
pub(crate) const SELECT_TOL: f64 = 1e-6;

/// Worst-case selection among the (numerically) tied maximisers of `s`.
pub(crate) fn worst_pick(s: &[f64], p: &[f64]) -> usize {
    let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..s.len()).filter(|&k| s[k] >= m - SELECT_TOL).min_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap()
}

/// One assertion of an experiment. It passes when `margin ≥ −tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detail {
    pub name: String,
    pub margin: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Detail {
    pub fn new(name: impl Into<String>, margin: f64, tolerance: f64) -> Self {
        Detail { name: name.into(), margin, tolerance, pass: margin >= -tolerance, note: None }
    }

    /// Passes when |deviation| ≤ tolerance.
    pub fn close(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        let d = if deviation.is_nan() { f64::INFINITY } else { deviation.abs() };
        Detail::new(name, -d, tolerance)
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Detail::new(name, if ok { 0.0 } else { -1.0 }, 0.0)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    /// CSV text by table name.
    pub tables: BTreeMap<String, String>,
    pub pass: bool,
    pub details: Vec<Detail>,
}

impl ExperimentResult {
    pub(crate) fn new(name: &str) -> Self {
        ExperimentResult { name: name.to_string(), tables: BTreeMap::new(), pass: true, details: Vec::new() }
    }

    pub(crate) fn push(&mut self, d: Detail) {
        self.pass &= d.pass;
        self.details.push(d);
    }

    pub(crate) fn table<S: Serialize>(&mut self, name: &str, rows: &[S]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        self.tables.insert(name.to_string(), String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))?);
        Ok(())
    }

    pub fn failed(&self) -> impl Iterator<Item = &Detail> {
        self.details.iter().filter(|d| !d.pass)
    }

    /// Writes `<name>.json` and one `<name>_<table>.csv` per table into `dir`.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        let path = dir.join(format!("{}.json", self.name));
        fs::write(&path, serde_json::to_string_pretty(self)?)?;
        out.push(path);
        for (t, body) in &self.tables {
            let path = dir.join(format!("{}_{t}.csv", self.name));
            fs::write(&path, body)?;
            out.push(path);
        }
        Ok(out)
    }
}

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::binary::{delta_binary_closed, delta_binary_definition, delta_binary_numeric};
use super::delta_max::delta_max_global_curve;
use crate::losses::{LossSpec, Transform};
use crate::optimize::OptimizerSettings;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveMethod {
    ClosedForm,
    NumericBinary,
    NumericDeltamax,
}

impl CurveMethod {
    pub fn name(self) -> &'static str {
        match self {
            CurveMethod::ClosedForm => "closed-form",
            CurveMethod::NumericBinary => "numeric-binary",
            CurveMethod::NumericDeltamax => "numeric-deltamax",
        }
    }
}

impl fmt::Display for CurveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CurveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "closed-form" | "closed" => Ok(CurveMethod::ClosedForm),
            "numeric-binary" | "binary" => Ok(CurveMethod::NumericBinary),
            "numeric-deltamax" | "deltamax" | "delta-max" => Ok(CurveMethod::NumericDeltamax),
            other => Err(Error::Domain(format!("unknown curve method '{other}'"))),
        }
    }
}

/// Extended reals in JSON: finite values as numbers, the rest as strings.
mod ext_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
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
pub struct CurvePoint {
    pub eps: f64,
    /// Monotone envelope of `measured`; NaN at a failed point.
    #[serde(with = "ext_real")]
    pub delta: f64,
    #[serde(with = "ext_real")]
    pub measured: f64,
    pub residual: f64,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness_p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CurvePoint {
    pub fn new(eps: f64, delta: f64) -> Self {
        CurvePoint { eps, delta, measured: delta, residual: 0.0, converged: true, witness_p: None, error: None }
    }

    pub fn failed(eps: f64, err: &Error) -> Self {
        CurvePoint { error: Some(err.to_string()), converged: false, ..CurvePoint::new(eps, f64::NAN) }
    }

    pub fn is_failed(&self) -> bool {
        self.delta.is_nan()
    }
}

/// δ(ε) sampled on an increasing ε grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    pub method: CurveMethod,
    pub points: Vec<CurvePoint>,
}

/// Result of [`generalized_inverse`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Inverse {
    pub eps: f64,
    /// No grid point reaches the requested level; `eps` is the largest grid ε.
    pub beyond_curve: bool,
}

impl CalibrationCurve {
    /// Validates the grid and applies the monotone envelope
    /// δ(ε) ← sup_{ε′ ≤ ε} δ(ε′), skipping failed points.
    pub fn new(method: CurveMethod, mut points: Vec<CurvePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("calibration curve needs at least one point".into()));
        }
        let mut prev = 0.0;
        let mut env = 0.0f64;
        for pt in points.iter_mut() {
            if !(pt.eps > prev && pt.eps <= 1.0) {
                return Err(Error::Domain(format!("curve eps {} not strictly increasing in (0, 1]", pt.eps)));
            }
            prev = pt.eps;
            if pt.measured.is_nan() {
                pt.delta = f64::NAN;
                continue;
            }
            if pt.measured < 0.0 {
                return Err(Error::Domain(format!("negative delta {} at eps {}", pt.measured, pt.eps)));
            }
            env = env.max(pt.measured);
            pt.delta = env;
        }
        Ok(CalibrationCurve { method, points })
    }

    pub fn from_pairs(method: CurveMethod, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(method, pairs.iter().map(|&(e, d)| CurvePoint::new(e, d)).collect())
    }

    /// Samples `f` on the grid; errors become failed points.
    pub fn from_fn(method: CurveMethod, grid: &[f64], f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let pts = grid
            .iter()
            .map(|&e| match f(e) {
                Ok(d) => CurvePoint::new(e, d),
                Err(err) => CurvePoint::failed(e, &err),
            })
            .collect();
        Self::new(method, pts)
    }

    /// Non-failed points.
    pub fn valid(&self) -> impl Iterator<Item = &CurvePoint> {
        self.points.iter().filter(|p| !p.is_failed())
    }

    pub fn max_eps(&self) -> f64 {
        self.valid().map(|p| p.eps).fold(0.0, f64::max)
    }

    pub fn has_gaps(&self) -> bool {
        self.points.iter().any(|p| p.is_failed())
    }

    /// Piecewise-linear δ through (0, 0) and the valid points; `None` beyond
    /// the last valid ε.
    pub fn interpolate(&self, eps: f64) -> Option<f64> {
        if eps <= 0.0 {
            return Some(0.0);
        }
        let (mut e0, mut d0) = (0.0, 0.0);
        for p in self.valid() {
            if eps <= p.eps {
                if eps == p.eps || p.delta.is_infinite() {
                    return Some(p.delta);
                }
                return Some(d0 + (p.delta - d0) * (eps - e0) / (p.eps - e0));
            }
            e0 = p.eps;
            d0 = p.delta;
        }
        None
    }

    /// Whether the interpolated curve is convex: slopes between consecutive
    /// valid points, starting from (0, 0), never decrease by more than 1e-9.
    pub fn is_convex(&self) -> bool {
        let (mut e0, mut d0) = (0.0, 0.0);
        let mut last = f64::NEG_INFINITY;
        for p in self.valid() {
            if p.delta.is_infinite() {
                return false;
            }
            let slope = (p.delta - d0) / (p.eps - e0);
            if slope < last - 1e-9 {
                return false;
            }
            last = slope;
            e0 = p.eps;
            d0 = p.delta;
        }
        true
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: CalibrationCurve = serde_json::from_str(s)?;
        Self::new(c.method, c.points)
    }

    /// CSV with columns eps, delta, measured, residual, converged, then one
    /// witness_p column per class when any point has a witness.
    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let k = self.points.iter().filter_map(|p| p.witness_p.as_ref().map(|v| v.len())).max().unwrap_or(0);
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = ["eps", "delta", "measured", "residual", "converged"].iter().map(|s| s.to_string()).collect();
        header.extend((0..k).map(|i| format!("witness_p{i}")));
        wr.write_record(&header)?;
        for p in &self.points {
            let mut rec = vec![p.eps.to_string(), p.delta.to_string(), p.measured.to_string(), p.residual.to_string(), p.converged.to_string()];
            for i in 0..k {
                rec.push(p.witness_p.as_ref().map_or(String::new(), |v| v[i].to_string()));
            }
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads the format of [`write_csv`](Self::write_csv). Only `eps` and
    /// `delta` are required; `method` is not stored in CSV.
    pub fn read_csv<R: std::io::Read>(method: CurveMethod, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let e_col = col("eps").ok_or_else(|| Error::field("eps", "missing CSV column"))?;
        let d_col = col("delta").ok_or_else(|| Error::field("delta", "missing CSV column"))?;
        let (m_col, r_col, c_col) = (col("measured"), col("residual"), col("converged"));
        let w_cols: Vec<usize> = (0..).map_while(|i| col(&format!("witness_p{i}"))).collect();
        let num = |rec: &csv::StringRecord, c: usize, name: &str| -> Result<f64> {
            let s = rec.get(c).unwrap_or("").trim();
            s.parse::<f64>().map_err(|_| Error::field(name, format!("not a number: '{s}'")))
        };
        let mut pts = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let eps = num(&rec, e_col, "eps")?;
            let delta = num(&rec, d_col, "delta")?;
            let mut p = CurvePoint::new(eps, delta);
            if let Some(c) = m_col {
                p.measured = num(&rec, c, "measured")?;
            }
            if let Some(c) = r_col {
                p.residual = num(&rec, c, "residual")?;
            }
            if let Some(c) = c_col {
                p.converged = rec.get(c).map(str::trim) == Some("true");
            }
            if !w_cols.is_empty() && rec.get(w_cols[0]).is_some_and(|s| !s.trim().is_empty()) {
                p.witness_p = Some(w_cols.iter().map(|&c| num(&rec, c, "witness_p")).collect::<Result<_>>()?);
            }
            pts.push(p);
        }
        Self::new(method, pts)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    pub fn load_csv(method: CurveMethod, path: &Path) -> Result<Self> {
        Self::read_csv(method, std::fs::File::open(path)?)
    }
}

/// δ⁻¹(x) = inf{ε : δ(ε) ≥ x}, linearly interpolated between the first grid
/// point reaching x and its predecessor (or the origin).
pub fn generalized_inverse(curve: &CalibrationCurve, x: f64) -> Result<Inverse> {
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("generalized inverse needs x ≥ 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(Inverse { eps: 0.0, beyond_curve: false });
    }
    let (mut e0, mut d0) = (0.0, 0.0);
    for p in curve.valid() {
        if p.delta >= x {
            let eps = if p.delta.is_infinite() || p.delta == d0 {
                p.eps
            } else {
                e0 + (x - d0) / (p.delta - d0) * (p.eps - e0)
            };
            return Ok(Inverse { eps, beyond_curve: false });
        }
        e0 = p.eps;
        d0 = p.delta;
    }
    Ok(Inverse { eps: curve.max_eps(), beyond_curve: true })
}

/// What a curve is computed from.
#[derive(Debug, Clone, Copy)]
pub enum CurveSource<'a> {
    /// A transformation function used as a binary margin loss.
    Phi(&'a Transform),
    Loss(&'a LossSpec),
}

/// Computes a calibration curve on `eps_grid` with the given method.
///
/// A method that reports "not calibrated" yields δ = 0 at that point. Other
/// point-level failures leave a gap (NaN) rather than failing the curve.
/// `resolution` is the simplex resolution for [`CurveMethod::NumericDeltamax`].
pub fn calibration_curve(
    source: CurveSource<'_>,
    eps_grid: &[f64],
    method: CurveMethod,
    resolution: usize,
    settings: &OptimizerSettings,
) -> Result<CalibrationCurve> {
    let not_cal = |r: Result<f64>| match r {
        Err(Error::NotCalibrated) => Ok(0.0),
        r => r,
    };
    match method {
        CurveMethod::ClosedForm => {
            let phi = match source {
                CurveSource::Phi(phi) => *phi,
                CurveSource::Loss(l) => l.phi,
            };
            CalibrationCurve::from_fn(method, eps_grid, |e| not_cal(delta_binary_closed(&phi, e)))
        }
        CurveMethod::NumericBinary => {
            let mut pts = Vec::with_capacity(eps_grid.len());
            for &e in eps_grid {
                let r = match source {
                    CurveSource::Phi(phi) => delta_binary_numeric(phi, e, settings),
                    CurveSource::Loss(l) => delta_binary_definition(l, e, settings),
                };
                pts.push(match r {
                    Ok(d) => CurvePoint { residual: d.residual, converged: d.converged, ..CurvePoint::new(e, d.value) },
                    Err(Error::NotCalibrated) => CurvePoint::new(e, 0.0),
                    Err(err) => CurvePoint::failed(e, &err),
                });
            }
            CalibrationCurve::new(method, pts)
        }
        CurveMethod::NumericDeltamax => {
            let loss = match source {
                CurveSource::Phi(phi) => LossSpec::zzh(*phi, 2),
                CurveSource::Loss(l) => *l,
            };
            let pts = match delta_max_global_curve(&loss, eps_grid, resolution, settings) {
                Ok(ds) => ds
                    .into_iter()
                    .map(|d| CurvePoint {
                        eps: d.eps,
                        delta: d.value,
                        measured: d.value,
                        residual: d.residual,
                        converged: d.converged,
                        witness_p: d.witness_p,
                        error: None,
                    })
                    .collect(),
                Err(err @ Error::Domain(_)) => return Err(err),
                Err(err) => eps_grid.iter().map(|&e| CurvePoint::failed(e, &err)).collect(),
            };
            CalibrationCurve::new(method, pts)
        }
    }
}

/// ε = 0.1, 0.2, …, 0.9.
pub fn default_eps_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

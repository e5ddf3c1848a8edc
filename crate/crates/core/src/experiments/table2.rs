use serde::Serialize;

use super::{Detail, ExperimentResult};
use crate::calibration::{delta_binary_closed, delta_binary_numeric};
use crate::losses::{PhiKind, Transform};
use crate::optimize::OptimizerSettings;
use crate::{Error, Result};

/// Rows with a positive closed form.
pub const TABLE2_CALIBRATED: [Transform; 9] = [
    Transform::new(PhiKind::ZeroOne),
    Transform::new(PhiKind::Hinge),
    Transform::new(PhiKind::Modulus),
    Transform::new(PhiKind::Squared),
    Transform::new(PhiKind::TruncatedSquare),
    Transform::new(PhiKind::Exponential),
    Transform::new(PhiKind::Logistic),
    Transform::new(PhiKind::Sigmoid),
    Transform::kink(0.5),
];

pub const TABLE2_NOT_CALIBRATED: [Transform; 3] =
    [Transform::new(PhiKind::Identity), Transform::new(PhiKind::Linear), Transform::kink(0.0)];

#[derive(Serialize)]
struct Row {
    phi: String,
    eps: f64,
    closed: f64,
    numeric: f64,
    abs_diff: f64,
    residual: f64,
}

/// Numeric δ_binary against the closed form for every calibrated row, the
/// shared curves modulus = hinge and truncated square = squared, and the
/// not-calibrated flag for identity, linear and the flat kink.
pub fn reproduce_table2(eps_grid: &[f64], settings: &OptimizerSettings) -> Result<ExperimentResult> {
    const TOL: f64 = 1e-6;
    let mut res = ExperimentResult::new("table2");
    let mut rows = Vec::new();
    let mut numeric = Vec::new();
    for phi in TABLE2_CALIBRATED {
        let mut worst: f64 = 0.0;
        let mut curve = Vec::new();
        for &e in eps_grid {
            let closed = delta_binary_closed(&phi, e)?;
            let (num, residual) = match delta_binary_numeric(&phi, e, settings) {
                Ok(d) => (d.value, d.residual),
                Err(_) => (f64::NAN, f64::NAN),
            };
            let diff = (num - closed).abs();
            worst = if diff.is_nan() { f64::INFINITY } else { worst.max(diff) };
            rows.push(Row { phi: phi.to_string(), eps: e, closed, numeric: num, abs_diff: diff, residual });
            curve.push(num);
        }
        res.push(Detail::close(format!("{phi}: numeric vs closed form"), worst, TOL));
        numeric.push((phi.kind, curve));
    }
    let curve_of = |k: PhiKind| numeric.iter().find(|(kk, _)| *kk == k).map(|(_, c)| c.clone()).unwrap_or_default();
    for (a, b) in [(PhiKind::Modulus, PhiKind::Hinge), (PhiKind::TruncatedSquare, PhiKind::Squared)] {
        let dev = curve_of(a).iter().zip(curve_of(b)).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        res.push(Detail::close(format!("{} curve equals {}", a.name(), b.name()), dev, TOL));
    }
    for phi in TABLE2_NOT_CALIBRATED {
        let flagged = eps_grid.iter().all(|&e| matches!(delta_binary_closed(&phi, e), Err(Error::NotCalibrated)));
        // calibrated means δ(ε) > 0 for every ε > 0, so one zero suffices
        let numeric_zero = eps_grid.iter().any(|&e| match delta_binary_numeric(&phi, e, settings) {
            Ok(d) => d.value <= TOL,
            Err(Error::NotCalibrated) | Err(Error::Unbounded(_)) => true,
            Err(_) => false,
        });
        res.push(Detail::flag(format!("{phi}: flagged not calibrated"), flagged && numeric_zero));
    }
    res.table("rows", &rows)?;
    Ok(res)
}

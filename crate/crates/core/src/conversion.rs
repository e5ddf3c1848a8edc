//! Turning surrogate excess-risk bounds into 0-1 excess-risk bounds, and the
//! strong-concavity constant of the binary conditional risk.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{generalized_inverse, CalibrationCurve, Inverse};
use crate::losses::{worst_index, LossSpec, Surrogate, Transform};
use crate::optimize::{minimize_1d, OptimizerSettings};
use crate::{Error, Result};

/// A surrogate excess-risk bound and the optional noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RiskBoundInput {
    /// Estimation plus approximation part of the surrogate excess risk.
    pub surrogate_excess: f64,
    /// Noise-condition constant c > 0.
    pub c: Option<f64>,
    /// Noise-condition exponent α ∈ [0, 1].
    pub alpha: Option<f64>,
    /// inf of the surrogate risk, for losses that upper-bound the 0-1 loss.
    pub inf_surrogate_risk: Option<f64>,
}

impl RiskBoundInput {
    pub fn excess(surrogate_excess: f64) -> Self {
        RiskBoundInput { surrogate_excess, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.surrogate_excess >= 0.0) || !self.surrogate_excess.is_finite() {
            return Err(Error::field("surrogate_excess", format!("must be finite and ≥ 0, got {}", self.surrogate_excess)));
        }
        if let Some(c) = self.c {
            if !(c > 0.0) || !c.is_finite() {
                return Err(Error::field("c", format!("must be positive, got {c}")));
            }
        }
        if let Some(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(Error::field("alpha", format!("must lie in [0, 1], got {a}")));
            }
        }
        Ok(())
    }
}

/// Bound on the 0-1 risk for a loss that dominates the 0-1 loss:
/// surrogate excess plus the surrogate risk infimum.
pub fn convert_dominating(bound: &RiskBoundInput) -> Result<f64> {
    bound.validate()?;
    let inf = bound
        .inf_surrogate_risk
        .ok_or_else(|| Error::field("inf_surrogate_risk", "required for the dominating-loss bound"))?;
    Ok(bound.surrogate_excess + inf)
}

/// Spot-checks L(s, y) ≥ 1{f(s) ≠ y} on random scores, with f breaking ties
/// against y. Returns the first (s, y) that fails.
pub fn check_domination(loss: &LossSpec, samples: usize, seed: u64) -> Result<Option<(Vec<f64>, usize)>> {
    loss.validate()?;
    let k = loss.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..samples {
        // exact ties are where domination is tightest
        let tie = (n % 4 == 0).then(|| (rng.random_range(0..k), rng.random_range(0..k)));
        let s = loss.score_set.sample(&mut rng, tie);
        for y in 0..k {
            let mut p = vec![1.0; k];
            p[y] = 2.0;
            let wrong = worst_index(&s, &p) != y;
            if wrong && loss.loss(&s, y) < 1.0 - 1e-12 {
                return Ok(Some((s, y)));
            }
        }
    }
    Ok(None)
}

/// [`convert_dominating`] after a domination spot-check on `loss`.
pub fn convert_dominating_checked(loss: &LossSpec, bound: &RiskBoundInput, samples: usize, seed: u64) -> Result<f64> {
    if let Some((s, y)) = check_domination(loss, samples, seed)? {
        return Err(Error::Domain(format!(
            "{loss} does not dominate the 0-1 loss: L({s:?}, {y}) = {} < 1",
            loss.loss(&s, y)
        )));
    }
    convert_dominating(bound)
}

/// δ⁻¹(surrogate excess) on a calibration curve.
pub fn convert_calibrated(curve: &CalibrationCurve, bound: &RiskBoundInput) -> Result<Inverse> {
    bound.validate()?;
    if curve.valid().any(|p| p.delta <= 0.0) {
        return Err(Error::NotCalibrated);
    }
    generalized_inverse(curve, bound.surrogate_excess)
}

/// Smallest ε with c·ε^α·δ(ε^{1−α}/(2c)) ≥ surrogate excess, by bisection
/// on the interpolated curve. The curve must be convex.
pub fn convert_mtnc(curve: &CalibrationCurve, bound: &RiskBoundInput) -> Result<Inverse> {
    bound.validate()?;
    let c = bound.c.ok_or_else(|| Error::field("c", "required for the noise-condition bound"))?;
    let alpha = bound.alpha.ok_or_else(|| Error::field("alpha", "required for the noise-condition bound"))?;
    if !curve.is_convex() {
        return Err(Error::Domain("noise-condition conversion needs a convex calibration curve".into()));
    }
    let x = bound.surrogate_excess;
    if x == 0.0 {
        return Ok(Inverse { eps: 0.0, beyond_curve: false });
    }
    let e_max = curve.max_eps();
    let threshold = |eps: f64| -> Option<f64> {
        let arg = eps.powf(1.0 - alpha) / (2.0 * c);
        curve.interpolate(arg).map(|d| c * eps.powf(alpha) * d)
    };
    // largest ε whose argument stays on the curve, capped at 1
    let top = if alpha < 1.0 { (2.0 * c * e_max).powf(1.0 / (1.0 - alpha)).min(1.0) } else { 1.0 };
    match threshold(top) {
        Some(t) if t >= x => {}
        _ => return Ok(Inverse { eps: top, beyond_curve: true }),
    }
    let (mut lo, mut hi) = (0.0, top);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if threshold(mid).is_some_and(|t| t >= x) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Inverse { eps: hi, beyond_curve: false })
}

/// Output of [`zhang_constant`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZhangConstant {
    /// (p, V(p)) on the grid 0, h, …, 1.
    pub v: Vec<(f64, f64)>,
    /// −max of the central second difference over the interior grid.
    pub c_prime: f64,
    /// √c′ / 2, absent when c′ ≤ 1e-6 or the optimizer failed.
    pub c: Option<f64>,
    /// The estimate ignores p ∈ {0, 1}, where V″ may blow up or vanish.
    pub boundary_caveat: bool,
    /// Interior p where the 1-D minimisation did not converge.
    pub nonconverged: Vec<f64>,
}

impl ZhangConstant {
    /// V at an arbitrary p in [0, 1] by linear interpolation.
    pub fn eval(&self, p: f64) -> f64 {
        let i = self.v.partition_point(|(q, _)| *q < p);
        if i == 0 {
            return self.v[0].1;
        }
        if i >= self.v.len() {
            return self.v[self.v.len() - 1].1;
        }
        let ((p0, v0), (p1, v1)) = (self.v[i - 1], self.v[i]);
        v0 + (v1 - v0) * (p - p0) / (p1 - p0)
    }
}

/// V(p) = inf_t p·φ(−t) + (1−p)·φ(t) on a p grid and the curvature
/// constant c with V″ ≤ −c′, c = √c′/2.
pub fn zhang_constant(phi: &Transform, grid_step: f64, settings: &OptimizerSettings) -> Result<ZhangConstant> {
    phi.validate()?;
    if !(grid_step > 0.0 && grid_step <= 0.25) {
        return Err(Error::Domain(format!("grid step {grid_step} outside (0, 0.25]")));
    }
    if !phi.is_convex() || !phi.is_lower_bounded() {
        return Err(Error::Domain(format!("{phi} must be convex and lower-bounded")));
    }
    for t in [0.25, 0.5, 1.0, 2.0] {
        if !(phi.eval(t) > phi.eval(-t)) {
            return Err(Error::Domain(format!("{phi} fails φ(t) > φ(−t) at t = {t}")));
        }
    }
    let n = (1.0 / grid_step).round() as usize;
    let h = 1.0 / n as f64;
    let mut v = Vec::with_capacity(n + 1);
    let mut nonconverged = Vec::new();
    for i in 0..=n {
        let p = i as f64 * h;
        let r = minimize_1d(|t| p * phi.eval(-t) + (1.0 - p) * phi.eval(t), settings);
        if !r.converged && i > 0 && i < n {
            nonconverged.push(p);
        }
        v.push((p, r.value));
    }
    let mut max_d2 = f64::NEG_INFINITY;
    for i in 1..n {
        let d2 = (v[i + 1].1 - 2.0 * v[i].1 + v[i - 1].1) / (h * h);
        max_d2 = max_d2.max(d2);
    }
    let c_prime = -max_d2;
    let c = if c_prime > 1e-6 && nonconverged.is_empty() { Some(c_prime.sqrt() / 2.0) } else { None };
    Ok(ZhangConstant { v, c_prime, c, boundary_caveat: true, nonconverged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::CurveMethod;

    fn square_curve() -> CalibrationCurve {
        let pairs: Vec<(f64, f64)> = (1..=100).map(|i| i as f64 / 100.0).map(|e| (e, e * e)).collect();
        CalibrationCurve::from_pairs(CurveMethod::ClosedForm, &pairs).unwrap()
    }

    #[test]
    fn dominating() {
        let b = RiskBoundInput { inf_surrogate_risk: Some(0.6), ..RiskBoundInput::excess(0.1) };
        assert!((convert_dominating(&b).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(convert_dominating(&RiskBoundInput { inf_surrogate_risk: Some(0.0), ..Default::default() }).unwrap(), 0.0);
        assert!(convert_dominating(&RiskBoundInput::excess(0.1)).is_err());
        let llw = LossSpec::llw(Transform::hinge(), 3);
        assert_eq!(llw.loss(&[1.0, -0.5, -0.5], 2), 2.5);
        assert_eq!(check_domination(&llw, 500, 1).unwrap(), None);
        let sq = LossSpec::llw(Transform::exponential(), 3);
        assert!(convert_dominating_checked(&sq, &b, 500, 1).is_ok());
        let zzh = LossSpec::zzh(Transform::squared(), 3);
        assert!(check_domination(&zzh, 500, 1).unwrap().is_some());
    }

    #[test]
    fn calibrated_examples() {
        let c = square_curve();
        assert!((convert_calibrated(&c, &RiskBoundInput::excess(0.01)).unwrap().eps - 0.1).abs() < 1e-12);
        let z = CalibrationCurve::from_pairs(CurveMethod::ClosedForm, &[(0.5, 0.0), (1.0, 0.0)]).unwrap();
        assert_eq!(convert_calibrated(&z, &RiskBoundInput::excess(0.01)), Err(Error::NotCalibrated));
    }

    #[test]
    fn mtnc_examples() {
        let c = square_curve();
        let b = |x, a| RiskBoundInput { c: Some(1.0), alpha: Some(a), ..RiskBoundInput::excess(x) };
        assert!((convert_mtnc(&c, &b(0.01, 0.0)).unwrap().eps - 0.2).abs() < 1e-9);
        for x in [0.001, 0.01, 0.1, 0.2] {
            assert!((convert_mtnc(&c, &b(x, 1.0)).unwrap().eps - 4.0 * x).abs() < 1e-9);
        }
        assert!(convert_mtnc(&c, &b(0.5, 1.0)).unwrap().beyond_curve);
        let concave = CalibrationCurve::from_pairs(CurveMethod::ClosedForm, &[(0.5, 0.5), (1.0, 0.6)]).unwrap();
        assert!(convert_mtnc(&concave, &b(0.1, 0.0)).is_err());
        assert!(convert_mtnc(&c, &RiskBoundInput::excess(0.1)).is_err());
    }

    #[test]
    fn zhang_constants() {
        let st = OptimizerSettings::default();
        let sq = zhang_constant(&Transform::squared(), 0.01, &st).unwrap();
        assert!((sq.c.unwrap() - 2f64.sqrt()).abs() < 1e-3);
        for (p, want) in [(0.25, 0.75), (0.5, 1.0), (0.75, 0.75)] {
            assert!((sq.eval(p) - want).abs() < 1e-9);
        }
        let ex = zhang_constant(&Transform::exponential(), 0.01, &st).unwrap();
        assert!((ex.eval(0.5) - 1.0).abs() < 1e-9);
        assert!((ex.c.unwrap() - 1.0).abs() < 1e-3);
        let hi = zhang_constant(&Transform::hinge(), 0.01, &st).unwrap();
        assert_eq!(hi.c, None);
        assert!(zhang_constant(&Transform::new(crate::losses::PhiKind::Sigmoid), 0.01, &st).is_err());
    }
}

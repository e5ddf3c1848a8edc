use serde::Serialize;

use crate::losses::{Distribution, LossSpec, PhiKind, Surrogate, Transform};
use crate::optimize::{minimize_1d, minimize_over_scores, minimize_scan, OptimizerSettings};
use crate::{Error, Result};

/// A numerically computed calibration value with its optimizer diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericDelta {
    pub value: f64,
    pub residual: f64,
    pub converged: bool,
}

fn check_eps_open(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 1)")));
    }
    Ok(())
}

/// Closed-form binary calibration function of the margin loss φ(y·t).
///
/// Returns [`Error::NotCalibrated`] for identity, linear and kink with τ = 0.
/// For kink with 0 < τ < 1 this is the exact value max(τε, 1 − (1−ε)(3−τ)/2),
/// which reduces to ε for τ ≥ 1.
pub fn delta_binary_closed(phi: &Transform, eps: f64) -> Result<f64> {
    check_eps_open(eps)?;
    phi.validate()?;
    if phi.floor.is_some() {
        return Err(Error::Unsupported("closed form for clipped transforms".into()));
    }
    let e = eps;
    Ok(match phi.kind {
        PhiKind::ZeroOne | PhiKind::Hinge | PhiKind::Modulus | PhiKind::Sigmoid => e,
        PhiKind::Squared | PhiKind::TruncatedSquare => e * e,
        PhiKind::Exponential => 1.0 - (1.0 - e * e).sqrt(),
        PhiKind::Logistic => 0.5 * ((1.0 - e) * (1.0 - e).ln() + (1.0 + e) * (1.0 + e).ln()),
        PhiKind::Kink => {
            let tau = phi.tau;
            if tau == 0.0 {
                return Err(Error::NotCalibrated);
            }
            if tau >= 1.0 {
                e
            } else {
                (tau * e).max(1.0 - (1.0 - e) * (3.0 - tau) / 2.0)
            }
        }
        PhiKind::Identity | PhiKind::Linear => return Err(Error::NotCalibrated),
        k => return Err(Error::Unsupported(format!("no closed form for {k}"))),
    })
}

/// Numeric binary calibration function of the margin loss φ(y·t).
///
/// Convex φ: φ(0) − ½ inf_t [(1+ε)φ(t) + (1−ε)φ(−t)] via [`minimize_1d`].
/// Non-convex φ: δ_max(ε, p^ε) of the margin loss with worst-case ties, by
/// dense scan and golden refinement over t ∈ [−R, R].
pub fn delta_binary_numeric(phi: &Transform, eps: f64, settings: &OptimizerSettings) -> Result<NumericDelta> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 1]")));
    }
    phi.validate()?;
    if !phi.is_lower_bounded() {
        return Err(Error::Unbounded(format!("{phi} is not lower-bounded")));
    }
    if phi.is_convex() {
        let r = minimize_1d(|t| (1.0 + eps) * phi.eval(t) + (1.0 - eps) * phi.eval(-t), settings);
        return Ok(NumericDelta {
            value: (phi.eval(0.0) - 0.5 * r.value).max(0.0),
            residual: r.residual,
            converged: r.converged || r.boundary,
        });
    }
    // scores (t, −t): the selected class is 2 iff t ≤ 0 (ties go to the worse class)
    let (a, b) = ((1.0 + eps) / 2.0, (1.0 - eps) / 2.0);
    let risk = |t: f64| a * phi.eval(-t) + b * phi.eval(t);
    let radius = settings.box_radius;
    let n = 40_001;
    let (_, sub) = minimize_scan(risk, -radius, 0.0, n, 1e-12);
    let (_, all) = minimize_scan(risk, -radius, radius, 2 * n, 1e-12);
    let all = all.min(sub);
    Ok(NumericDelta { value: (sub - all).max(0.0), residual: 0.0, converged: true })
}

/// δ_binary from its two-infimum definition on the binary instance of a
/// loss: inf_s R(s, p⁰) − inf_s R(s, p^ε).
pub fn delta_binary_definition(loss: &LossSpec, eps: f64, settings: &OptimizerSettings) -> Result<NumericDelta> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 1]")));
    }
    let bin = loss.with_classes(2);
    bin.validate()?;
    let p0 = Distribution::p_eps(0.0)?;
    let pe = Distribution::p_eps(eps)?;
    let r0 = minimize_over_scores(|s: &[f64]| bin.risk(s, p0.as_slice()), &bin.score_set, &[], settings)?;
    let re = minimize_over_scores(|s: &[f64]| bin.risk(s, pe.as_slice()), &bin.score_set, &[], settings)?;
    if r0.unbounded || re.unbounded {
        return Err(Error::Unbounded(format!("{bin} has no finite risk infimum")));
    }
    Ok(NumericDelta {
        value: (r0.value - re.value).max(0.0),
        residual: r0.residual + re.residual,
        converged: r0.converged && re.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st() -> OptimizerSettings {
        OptimizerSettings::default()
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(delta_binary_closed(&Transform::hinge(), 0.5).unwrap(), 0.5);
        assert_eq!(delta_binary_closed(&Transform::squared(), 0.5).unwrap(), 0.25);
        assert!((delta_binary_closed(&Transform::exponential(), 0.5).unwrap() - 0.133_974_596_215_561_35).abs() < 1e-15);
        assert!((delta_binary_closed(&Transform::logistic(), 0.5).unwrap() - 0.130_812_035_941_137_8).abs() < 1e-12);
        assert_eq!(delta_binary_closed(&Transform::kink(0.0), 0.3), Err(Error::NotCalibrated));
        assert_eq!(delta_binary_closed(&Transform::new(PhiKind::Identity), 0.3), Err(Error::NotCalibrated));
        assert_eq!(delta_binary_closed(&Transform::kink(1.0), 0.3).unwrap(), 0.3);
        assert!(delta_binary_closed(&Transform::hinge(), 1.0).is_err());
        assert!(delta_binary_closed(&Transform::hinge(), 0.0).is_err());
    }

    #[test]
    fn numeric_matches_table() {
        let d = delta_binary_numeric(&Transform::hinge(), 0.3, &st()).unwrap();
        assert!((d.value - 0.3).abs() < 1e-6);
        let d = delta_binary_numeric(&Transform::squared(), 0.7, &st()).unwrap();
        assert!((d.value - 0.49).abs() < 1e-6);
        let d = delta_binary_numeric(&Transform::exponential(), 0.9, &st()).unwrap();
        assert!((d.value - (1.0 - 0.19f64.sqrt())).abs() < 1e-6);
        let d = delta_binary_numeric(&Transform::new(PhiKind::ZeroOne), 0.4, &st()).unwrap();
        assert!((d.value - 0.4).abs() < 1e-9);
    }

    #[test]
    fn kink_exact_formula_matches_numeric() {
        for tau in [0.0, 0.25, 0.5, 0.75, 1.0, 2.0] {
            for e in [0.1, 0.3, 0.5, 0.9] {
                let num = delta_binary_numeric(&Transform::kink(tau), e, &st()).unwrap().value;
                let exact = if tau >= 1.0 { e } else { (tau * e).max(1.0 - (1.0 - e) * (3.0 - tau) / 2.0) };
                assert!((num - exact).abs() < 1e-6, "tau {tau} eps {e}: {num} vs {exact}");
            }
        }
    }

    #[test]
    fn sigmoid_numeric_is_half_eps() {
        // inf over the wrong sign is ½ (at t = 0), the unconstrained inf is (1−ε)/2
        for e in [0.2, 0.6] {
            let d = delta_binary_numeric(&Transform::new(PhiKind::Sigmoid), e, &st()).unwrap();
            assert!((d.value - e / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn definition_form_on_margin_losses() {
        for phi in [Transform::hinge(), Transform::squared(), Transform::exponential(), Transform::logistic()] {
            for e in [0.25, 0.5] {
                let def = delta_binary_definition(&LossSpec::zzh(phi, 2), e, &st()).unwrap().value;
                let closed = delta_binary_closed(&phi, e).unwrap();
                assert!((def - closed).abs() < 1e-6, "{phi} {e}: {def} vs {closed}");
            }
        }
    }

    #[test]
    fn not_lower_bounded_is_an_error() {
        assert!(matches!(
            delta_binary_numeric(&Transform::new(PhiKind::Linear), 0.5, &st()),
            Err(Error::Unbounded(_))
        ));
    }
}

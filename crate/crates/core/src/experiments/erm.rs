use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{worst_pick, Detail, ExperimentResult};
use crate::calibration::{calibration_curve, generalized_inverse, CalibrationCurve, CurveMethod, CurveSource};
use crate::losses::{Distribution, LossSpec, Surrogate};
use crate::optimize::{minimize_over_scores, OptimizerSettings};
use crate::{Error, Result};

/// Slack added to the converted bound before comparing with the true excess.
const SLACK: f64 = 2e-2;

/// A finite feature space with known conditional class probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticProblem {
    #[serde(rename = "X_size")]
    pub x_size: usize,
    #[serde(rename = "K")]
    pub k: usize,
    /// Row x is P(Y | X = x).
    pub conditional_table: Vec<Vec<f64>>,
    pub marginal: Vec<f64>,
    pub seed: u64,
}

impl SyntheticProblem {
    /// One feature value with class distribution `p`.
    pub fn single(p: &[f64], seed: u64) -> Self {
        SyntheticProblem { x_size: 1, k: p.len(), conditional_table: vec![p.to_vec()], marginal: vec![1.0], seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_size == 0 || self.x_size > 10 {
            return Err(Error::field("X_size", "must be in 1..=10"));
        }
        if !(2..=4).contains(&self.k) {
            return Err(Error::field("K", "must be in 2..=4"));
        }
        if self.conditional_table.len() != self.x_size {
            return Err(Error::field("conditional_table", format!("needs {} rows", self.x_size)));
        }
        for row in &self.conditional_table {
            if row.len() != self.k {
                return Err(Error::field("conditional_table", format!("rows need {} entries", self.k)));
            }
            Distribution::new(row.clone()).map_err(|e| Error::field("conditional_table", e.to_string()))?;
        }
        if self.marginal.len() != self.x_size {
            return Err(Error::field("marginal", format!("needs {} entries", self.x_size)));
        }
        let total: f64 = self.marginal.iter().sum();
        if self.marginal.iter().any(|&m| !(m >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::field("marginal", "must be nonnegative and sum to 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErmRecord {
    pub n: usize,
    pub trial: usize,
    pub surrogate_excess: f64,
    pub true_excess: f64,
    /// Generalized inverse of the curve at the surrogate excess; 1 when the
    /// excess lies beyond the curve.
    pub bound: f64,
}

/// The curve used to convert surrogate excess: the binary definition for
/// K = 2, the grid δ_max oracle otherwise.
pub fn default_erm_curve(loss: &LossSpec, settings: &OptimizerSettings) -> Result<CalibrationCurve> {
    let grid: Vec<f64> = (1..20).map(|k| 0.05 * k as f64).collect();
    let (method, res) = match loss.k() {
        2 => (CurveMethod::NumericBinary, 0),
        3 => (CurveMethod::NumericDeltamax, 20),
        _ => (CurveMethod::NumericDeltamax, 10),
    };
    calibration_curve(CurveSource::Loss(loss), &grid, method, res, settings)
}

/// Tabular ERM: for each n and trial, draw n pairs, minimise the empirical
/// surrogate risk separately at every x, and score the result with the exact
/// tables. Trial t at the i-th sample size uses ChaCha stream (i << 32) | t
/// of the problem seed.
pub fn erm_records(
    problem: &SyntheticProblem,
    loss: &LossSpec,
    n_grid: &[usize],
    trials: usize,
    curve: &CalibrationCurve,
    settings: &OptimizerSettings,
) -> Result<Vec<ErmRecord>> {
    problem.validate()?;
    loss.validate()?;
    if loss.k() != problem.k {
        return Err(Error::Domain(format!("loss has {} classes, problem has {}", loss.k(), problem.k)));
    }
    let (xs, k) = (problem.x_size, problem.k);
    let minimise = |p: &[f64]| -> Result<Vec<f64>> {
        let r = minimize_over_scores(|s: &[f64]| loss.risk(s, p), &loss.score_set, &[], settings)?;
        if r.unbounded {
            return Err(Error::Unbounded(format!("risk of {loss} at {p:?}")));
        }
        Ok(r.minimizer)
    };
    let mut inf_risk = Vec::with_capacity(xs);
    for row in &problem.conditional_table {
        let s = minimise(row)?;
        inf_risk.push(loss.risk(&s, row));
    }
    let fallback = minimise(&vec![1.0 / k as f64; k])?;
    let joint: Vec<f64> = (0..xs).flat_map(|x| problem.conditional_table[x].iter().map(move |&q| q * problem.marginal[x])).collect();
    let cells = WeightedIndex::new(&joint).map_err(|e| Error::Domain(format!("joint table: {e}")))?;

    let mut out = Vec::with_capacity(n_grid.len() * trials);
    for (ni, &n) in n_grid.iter().enumerate() {
        if n == 0 {
            return Err(Error::Domain("sample sizes must be positive".into()));
        }
        for trial in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
            rng.set_stream(((ni as u64) << 32) | trial as u64);
            let mut counts = vec![0usize; xs * k];
            for _ in 0..n {
                counts[cells.sample(&mut rng)] += 1;
            }
            let (mut sur, mut tru) = (0.0, 0.0);
            for x in 0..xs {
                let c = &counts[x * k..(x + 1) * k];
                let nx: usize = c.iter().sum();
                let s = if nx == 0 {
                    fallback.clone()
                } else {
                    let phat: Vec<f64> = c.iter().map(|&v| v as f64 / nx as f64).collect();
                    minimise(&phat)?
                };
                let p = &problem.conditional_table[x];
                let mu = problem.marginal[x];
                sur += mu * (loss.risk(&s, p) - inf_risk[x]).max(0.0);
                let top = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                tru += mu * (top - p[worst_pick(&s, p)]);
            }
            let inv = generalized_inverse(curve, sur)?;
            let bound = if inv.beyond_curve { 1.0 } else { inv.eps };
            out.push(ErmRecord { n, trial, surrogate_excess: sur, true_excess: tru, bound });
        }
    }
    Ok(out)
}

/// [`erm_records`] plus the assertion that true excess ≤ bound + 0.02 in at
/// least 99% of the trials at every sample size.
pub fn simulate_erm(
    problem: &SyntheticProblem,
    loss: &LossSpec,
    n_grid: &[usize],
    trials: usize,
    curve: &CalibrationCurve,
    settings: &OptimizerSettings,
) -> Result<ExperimentResult> {
    let recs = erm_records(problem, loss, n_grid, trials, curve, settings)?;
    let mut res = ExperimentResult::new("erm");
    let need = (0.99 * trials as f64).ceil();
    for &n in n_grid {
        let ok = recs.iter().filter(|r| r.n == n && r.true_excess <= r.bound + SLACK).count();
        let worst = recs.iter().filter(|r| r.n == n).map(|r| r.true_excess - r.bound).fold(f64::NEG_INFINITY, f64::max);
        res.push(
            Detail::new(format!("{loss}, n = {n}: bound holds in ≥ 99% of trials"), ok as f64 - need, 0.0)
                .with_note(format!("{ok}/{trials} trials; worst true − bound = {worst:.3e}")),
        );
    }
    res.table("scatter", &recs)?;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::Transform;

    #[test]
    fn problem_validation() {
        let mut p = SyntheticProblem::single(&[0.7, 0.3], 1);
        p.validate().unwrap();
        p.marginal = vec![0.5];
        assert!(matches!(p.validate(), Err(Error::Field { ref field, .. }) if field == "marginal"));
        let j = r#"{"X_size":1,"K":2,"conditional_table":[[0.7,0.3]],"marginal":[1.0],"seed":3,"extra":1}"#;
        assert!(serde_json::from_str::<SyntheticProblem>(j).is_err());
    }

    #[test]
    fn hinge_binary_is_reproducible() {
        let st = OptimizerSettings::default().with_restarts(2);
        let loss = LossSpec::llw(Transform::hinge(), 2);
        let curve = CalibrationCurve::from_pairs(CurveMethod::ClosedForm, &[(0.5, 0.5), (1.0, 1.0)]).unwrap();
        let prob = SyntheticProblem::single(&[0.7, 0.3], 7);
        let a = erm_records(&prob, &loss, &[200], 5, &curve, &st).unwrap();
        let b = erm_records(&prob, &loss, &[200], 5, &curve, &st).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.true_excess <= r.bound + SLACK));
        // the hinge minimiser is piecewise constant in p̂: (1, −1) whenever p̂₁ > ½
        assert!(a.iter().all(|r| r.true_excess == 0.0 && r.surrogate_excess < 1e-9));
    }
}

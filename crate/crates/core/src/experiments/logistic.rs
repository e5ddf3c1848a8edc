use serde::Serialize;

use super::{Detail, ExperimentResult};
use crate::losses::{Adjustment, LossSpec, Surrogate};
use crate::optimize::{minimize_over_scores, simplex_grid, Constraint, OptimizerSettings};
use crate::{Error, Result};

#[derive(Serialize)]
struct Row {
    p: String,
    j: usize,
    coupled: f64,
    lr: f64,
    abs_diff: f64,
    /// l(s) of the coupled minimiser before and after the shift s − l(s)·1.
    l_raw: f64,
    l_shifted: f64,
    lr_at_exp_shifted: f64,
}

/// Coupled logistic loss on ℝᴷ against LR on the simplex: for every p on the
/// grid and every class j, the minimum over scores whose argmax contains j
/// must agree. Each coupled minimiser is shifted by −l(s)·1 (the loss is
/// invariant under common shifts); the shifted score has l = 0 and its
/// exponential is a point of the simplex with the same LR risk.
pub fn logistic_equivalence(k: usize, resolution: usize, settings: &OptimizerSettings) -> Result<ExperimentResult> {
    const TOL: f64 = 1e-4;
    if !(2..=4).contains(&k) {
        return Err(Error::Domain(format!("logistic equivalence runs for 2 ≤ K ≤ 4, got {k}")));
    }
    let coupled = LossSpec::coupled_logistic(k);
    let lr = LossSpec::lr(k);
    let mut res = ExperimentResult::new("logistic-eq");
    let mut rows = Vec::new();
    let (mut worst_value, mut worst_l, mut worst_map) = (0.0f64, 0.0f64, 0.0f64);
    for p in simplex_grid(k, resolution) {
        let p = p.as_slice();
        for j in 0..k {
            let cons = Constraint::argmax(k, j);
            let c = minimize_over_scores(|s: &[f64]| coupled.risk(s, p), &coupled.score_set, &cons, settings)?;
            let l = minimize_over_scores(|s: &[f64]| lr.risk(s, p), &lr.score_set, &cons, settings)?;
            let l_raw = coupled.adjustment_value(Adjustment::Natural, &c.minimizer);
            let shifted: Vec<f64> = c.minimizer.iter().map(|v| v - l_raw).collect();
            let l_shifted = coupled.adjustment_value(Adjustment::Natural, &shifted);
            let on_simplex: Vec<f64> = shifted.iter().map(|v| v.exp()).collect();
            let lr_at = lr.risk(&on_simplex, p);
            let diff = (c.value - l.value).abs();
            worst_value = worst_value.max(diff);
            worst_l = worst_l.max(l_shifted.abs());
            worst_map = worst_map.max((lr_at - c.value).abs());
            rows.push(Row {
                p: format!("{p:?}"),
                j,
                coupled: c.value,
                lr: l.value,
                abs_diff: diff,
                l_raw,
                l_shifted,
                lr_at_exp_shifted: lr_at,
            });
        }
    }
    res.push(Detail::close("coupled and LR constrained minima agree", worst_value, TOL));
    res.push(Detail::close("shifted coupled minimisers have l(s) = 0", worst_l, 1e-6));
    res.push(Detail::close("exp of shifted minimiser has the same LR risk", worst_map, TOL));
    res.table("minima", &rows)?;
    Ok(res)
}

use serde::Serialize;

use super::{worst_pick, Detail, ExperimentResult};
use crate::calibration::delta_max_pointwise;
use crate::losses::{Distribution, LossSpec, Surrogate, Transform};
use crate::optimize::{minimize_over_scores, OptimizerSettings};
use crate::Result;

/// The two distributions of the non-calibration construction for the kink
/// with τ = ½.
pub const KINK_DISTRIBUTIONS: [[f64; 3]; 2] = [[8.0 / 20.0, 7.0 / 20.0, 5.0 / 20.0], [6.0 / 15.0, 7.0 / 15.0, 2.0 / 15.0]];

#[derive(Serialize)]
struct Row {
    loss: String,
    p1: f64,
    p2: f64,
    p3: f64,
    s1: f64,
    s2: f64,
    s3: f64,
    risk: f64,
    worst_pick: usize,
    argmax_p: usize,
    min_delta_max: f64,
    at_eps: f64,
}

/// LLW with the τ = ½ kink on the sum-to-zero set: at both distributions the
/// risk minimiser is (½, ½, −1), whose worst tie-broken selection is not the
/// most likely class, and δ_max(ε, p) vanishes for some ε > 0. LLW-hinge at
/// the same p is reported for contrast.
pub fn kink_counterexample(settings: &OptimizerSettings) -> Result<ExperimentResult> {
    let mut res = ExperimentResult::new("kink");
    let eps_grid: Vec<f64> = (1..20).map(|k| 0.05 * k as f64).collect();
    let mut rows = Vec::new();
    for (loss, is_kink) in [(LossSpec::llw(Transform::kink(0.5), 3), true), (LossSpec::llw(Transform::hinge(), 3), false)] {
        for p in KINK_DISTRIBUTIONS {
            let dist = Distribution::new(p.to_vec())?;
            let r = minimize_over_scores(|s: &[f64]| loss.risk(s, &p), &loss.score_set, &[], settings)?;
            let s = r.minimizer;
            let pick = worst_pick(&s, &p);
            let top = dist.argmax();
            let mut best = (f64::INFINITY, f64::NAN);
            for &e in &eps_grid {
                let d = delta_max_pointwise(&loss, e, &dist, settings)?;
                if d.value < best.0 {
                    best = (d.value, e);
                }
            }
            let tag = format!("{} at p = ({:.4}, {:.4}, {:.4})", loss.phi, p[0], p[1], p[2]);
            if is_kink {
                res.push(Detail::new(format!("{tag}: worst selection misses argmax p"), p[top] - p[pick] - 1e-9, 0.0));
                res.push(Detail::new(format!("{tag}: δ_max(ε, p) < 1e-6 for some ε"), 1e-6 - best.0, 0.0));
                let dev = [0.5, 0.5, -1.0].iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                res.push(Detail::close(format!("{tag}: minimiser is (1/2, 1/2, -1)"), dev, 1e-2));
            } else {
                res.push(
                    Detail::flag(format!("{tag}: selection equals argmax p"), pick == top && best.0 > 1e-6)
                        .with_note(format!("min δ_max(ε, p) = {:.4} at ε = {:.2}", best.0, best.1)),
                );
            }
            rows.push(Row {
                loss: loss.to_string(),
                p1: p[0],
                p2: p[1],
                p3: p[2],
                s1: s[0],
                s2: s[1],
                s3: s[2],
                risk: r.value,
                worst_pick: pick,
                argmax_p: top,
                min_delta_max: best.0,
                at_eps: best.1,
            });
        }
    }
    res.table("minimisers", &rows)?;
    Ok(res)
}

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{random_distribution, ConditionId, ConditionReport, GridInfo, Tally, Verdict, Witness};
use crate::losses::{permute, Distribution, LossSpec, ScoreSet, ScoreSetKind, Surrogate, GAP_TOL};
use crate::optimize::{minimize_over_scores, simplex_grid_interior, Constraint, OptimizerSettings};
use crate::Result;

/// −|R(s, p) − R(Ps, Pp)| relative to max(1, |R(s, p)|); −1 when Ps leaves S.
pub fn symmetry_margin<L: Surrogate + ?Sized>(loss: &L, s: &[f64], p: &[f64], perm: &[usize]) -> f64 {
    let ps = permute(s, perm);
    if !loss.score_set().contains(&ps) {
        return -1.0;
    }
    let a = loss.risk(s, p);
    let b = loss.risk(&ps, &permute(p, perm));
    if a == b {
        return 0.0;
    }
    -(a - b).abs() / a.abs().max(1.0)
}

/// Samples (s, p, P) and compares R(s, p) with R(Ps, Pp).
pub fn check_symmetry<L: Surrogate + ?Sized>(loss: &L, samples: usize, seed: u64, tol: f64) -> Result<ConditionReport> {
    let set = loss.score_set();
    set.validate()?;
    let k = loss.classes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new();
    for n in 0..samples {
        let s = set.sample(&mut rng, None);
        let p = random_distribution(&mut rng, k, n % 5 == 4);
        let mut perm: Vec<usize> = (0..k).collect();
        perm.shuffle(&mut rng);
        let m = symmetry_margin(loss, &s, &p, &perm);
        tally.record(m, Witness { p: Some(p), s: Some(s), perm: Some(perm), ..Default::default() });
    }
    Ok(tally.finish(ConditionId::Symmetry, loss.label(), tol, GridInfo::default(), seed))
}

fn analytic(id: ConditionId, set: &ScoreSet, seed: u64, why: &str) -> ConditionReport {
    ConditionReport {
        condition_id: id,
        loss: set.to_string(),
        verdict: Verdict::HoldsOnSamples,
        margin: 0.0,
        witness: None,
        samples: 0,
        failures: 0,
        tolerance: 0.0,
        grids: GridInfo::default(),
        seed,
        notes: vec![why.to_string()],
    }
}

/// Swapping: permuting two coordinates stays in S. Averaging: replacing the
/// two largest coordinates by their mean stays in S.
pub fn check_swapping_averaging(set: &ScoreSet, samples: usize, seed: u64) -> Result<(ConditionReport, ConditionReport)> {
    set.validate()?;
    if set.kind != ScoreSetKind::BoxedSumToZero {
        return Ok((
            analytic(ConditionId::Swapping, set, seed, "analytic: the set is invariant under coordinate permutations"),
            analytic(ConditionId::Averaging, set, seed, "analytic: the set is convex and permutation invariant"),
        ));
    }
    let k = set.k;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut swap, mut avg) = (Tally::new(), Tally::new());
    for _ in 0..samples {
        let s = set.sample(&mut rng, None);
        let (i, j) = (rng.random_range(0..k), rng.random_range(0..k));
        let mut t = s.clone();
        t.swap(i, j);
        let m = if set.contains(&t) { 0.0 } else { -1.0 };
        swap.record(m, Witness { s: Some(s.clone()), classes: Some((i, j)), ..Default::default() });

        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
        let (j, i) = (order[0], order[1]);
        let mut t = s.clone();
        t[i] = 0.5 * (s[i] + s[j]);
        t[j] = t[i];
        let m = if set.contains(&t) { 0.0 } else { -1.0 };
        avg.record(m, Witness { s: Some(s), classes: Some((i, j)), ..Default::default() });
    }
    Ok((
        swap.finish(ConditionId::Swapping, set.to_string(), 0.0, GridInfo::default(), seed),
        avg.finish(ConditionId::Averaging, set.to_string(), 0.0, GridInfo::default(), seed),
    ))
}

/// Minimises the risk at the simplex vertices and the uniform distribution;
/// an unbounded-below flag on any of them is a violation.
pub fn check_lower_bounded(loss: &LossSpec, settings: &OptimizerSettings) -> Result<ConditionReport> {
    loss.validate()?;
    let k = loss.k();
    let mut ps: Vec<Vec<f64>> = (0..k)
        .map(|y| {
            let mut p = vec![0.0; k];
            p[y] = 1.0;
            p
        })
        .collect();
    ps.push(Distribution::uniform(k).into_vec());
    let mut tally = Tally::new();
    for p in ps {
        match minimize_over_scores(|s: &[f64]| loss.risk(s, &p), &loss.score_set, &[], settings) {
            Ok(r) => {
                let m = if r.unbounded { f64::NEG_INFINITY } else { 0.0 };
                tally.record(m, Witness { p: Some(p), s: Some(r.minimizer), rhs: Some(r.value), ..Default::default() });
            }
            Err(e) => tally.fail(&e),
        }
    }
    Ok(tally.finish(ConditionId::LowerBounded, loss.to_string(), 0.0, GridInfo::default(), settings.seed))
}

/// Outcome of the order check at one distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderSample {
    /// −(risk increase forced by ordering the offending pair); 0 if none.
    pub margin: f64,
    pub witness: Witness,
    /// A tie or reversal that costs nothing to fix: the minimiser is not unique.
    pub degenerate: bool,
}

/// Checks p_i > p_j ⇒ s*_i > s*_j at the computed risk minimiser s*. A tie or
/// reversal is re-solved with s_i − s_j ≥ 0.01 forced: a risk increase above
/// `tol` is a violation, anything less is a degenerate (non-unique) minimiser.
pub fn order_margin(loss: &LossSpec, p: &Distribution, settings: &OptimizerSettings, tol: f64) -> Result<OrderSample> {
    let k = loss.k();
    let ps = p.as_slice();
    let risk = |s: &[f64]| loss.risk(s, ps);
    let r = minimize_over_scores(risk, &loss.score_set, &[], settings)?;
    if r.unbounded {
        return Err(crate::Error::Unbounded(format!("risk of {loss} unbounded at {ps:?}")));
    }
    let s = &r.minimizer;
    let mut out = OrderSample {
        margin: 0.0,
        witness: Witness { p: Some(ps.to_vec()), s: Some(s.clone()), ..Default::default() },
        degenerate: false,
    };
    for i in 0..k {
        for j in 0..k {
            if ps[i] > ps[j] + GAP_TOL && s[i] <= s[j] + 1e-6 {
                let forced = minimize_over_scores(risk, &loss.score_set, &[Constraint::gap(k, i, j, 0.01)], settings)?;
                let pen = forced.value - r.value;
                if pen > tol {
                    if -pen < out.margin {
                        out.margin = -pen;
                        out.degenerate = false;
                        out.witness.classes = Some((i, j));
                        out.witness.lhs = Some(r.value);
                        out.witness.rhs = Some(forced.value);
                    }
                } else if out.margin == 0.0 {
                    out.degenerate = true;
                    out.witness.classes = Some((i, j));
                }
            }
        }
    }
    Ok(out)
}

/// [`order_margin`] over the interior simplex grid.
pub fn check_order_preservation(loss: &LossSpec, resolution: usize, settings: &OptimizerSettings, tol: f64) -> Result<ConditionReport> {
    loss.validate()?;
    let mut tally = Tally::new();
    for p in simplex_grid_interior(loss.k(), resolution) {
        match order_margin(loss, &p, settings, tol) {
            Ok(o) if o.degenerate => tally.undecided(o.margin, o.witness, "minimiser ties classes with different probabilities at no cost"),
            Ok(o) => tally.record(o.margin, o.witness),
            Err(e) => tally.fail(&e),
        }
    }
    let grids = GridInfo { resolution: Some(resolution), ..Default::default() };
    Ok(tally.finish(ConditionId::OrderPreservation, loss.to_string(), tol, grids, settings.seed))
}

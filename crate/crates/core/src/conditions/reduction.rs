use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{random_distribution, ConditionId, ConditionReport, GridInfo, Tally, Verdict, Witness};
use crate::calibration::{class_profile, delta_binary_definition, injected_candidates, ClassProfile};
use crate::losses::{
    index_sets, Adjustment, Distribution, Family, LossSpec, Outer, PhiKind, Psi, ScoreSetKind, Surrogate, GAP_TOL,
};
use crate::optimize::{
    golden_section, minimize_1d, minimize_over_scores, minimize_over_scores_from, simplex_grid, Constraint, OptResult,
    OptimizerSettings,
};
use crate::{Error, Result};

/// The lower-bounding function for the gap condition.
#[derive(Clone, Copy)]
pub enum Zeta<'a> {
    /// ζ = δ_binary of the two-class instance of the loss.
    DeltaBinary,
    Custom(&'a dyn Fn(f64) -> f64),
}

/// Pairs (p₁, p₂) on a grid of the given step with p₁ ≥ p₂ ≥ 0, p₁ > 0 and
/// p₁ + p₂ ≤ 1.
pub fn pair_grid(step: f64) -> Result<Vec<(f64, f64)>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::Domain(format!("pair step {step} outside (0, 0.5]")));
    }
    let n = (1.0 / step).round() as usize;
    let mut out = Vec::new();
    for a in 1..=n {
        for b in 0..=a.min(n - a) {
            out.push((a as f64 / n as f64, b as f64 / n as f64));
        }
    }
    Ok(out)
}

fn checked(r: OptResult, what: &str) -> Result<OptResult> {
    if r.unbounded {
        return Err(Error::Unbounded(format!("{what} is unbounded below")));
    }
    Ok(r)
}

/// inf over the binary score set of R′(·, w).
fn binary_inf(bin: &LossSpec, adj: Adjustment, w: [f64; 2], settings: &OptimizerSettings) -> Result<OptResult> {
    let r = minimize_over_scores(|s: &[f64]| bin.pseudo(adj, s, &w), &bin.score_set, &[], settings)?;
    checked(r, "binary pseudo-risk")
}

/// inf R′(·, (p̄, p̄)) − inf R′(·, (p₁, p₂)) on the two-class instance.
fn binary_gap(bin: &LossSpec, adj: Adjustment, p1: f64, p2: f64, settings: &OptimizerSettings) -> Result<(f64, f64, f64)> {
    let pb = 0.5 * (p1 + p2);
    let a = binary_inf(bin, adj, [pb, pb], settings)?.value;
    let b = binary_inf(bin, adj, [p1, p2], settings)?.value;
    Ok((a - b, a, b))
}

fn c1_from_profile(
    loss: &LossSpec,
    eps: f64,
    p: &Distribution,
    prof: &ClassProfile,
    settings: &OptimizerSettings,
) -> Result<Option<(f64, Witness)>> {
    let sets = index_sets(eps, p)?;
    let Some(je) = sets.j() else { return Ok(None) };
    let j0 = p.argmax();
    let inf_t = sets.suboptimal.iter().map(|&j| prof.m[j]).fold(f64::INFINITY, f64::min);
    let ps = p.as_slice();
    let pair = minimize_over_scores(
        |s: &[f64]| loss.risk(s, ps),
        &loss.score_set,
        &Constraint::argmax_pair(loss.k(), je, j0),
        settings,
    )?;
    let pair = checked(pair, "risk")?;
    let w = Witness {
        p: Some(ps.to_vec()),
        s: Some(pair.minimizer),
        eps: Some(eps),
        classes: Some((je, j0)),
        lhs: Some(inf_t),
        rhs: Some(pair.value),
        ..Default::default()
    };
    Ok(Some((inf_t - pair.value, w)))
}

/// inf over ε-suboptimal scores minus inf over M(S, j_ε) ∩ M(S, j₀);
/// `None` when no class is ε-suboptimal.
pub fn c1_margin(loss: &LossSpec, eps: f64, p: &Distribution, settings: &OptimizerSettings) -> Result<Option<(f64, Witness)>> {
    if index_sets(eps, p)?.j().is_none() {
        return Ok(None);
    }
    let prof = class_profile(loss, p, settings)?;
    c1_from_profile(loss, eps, p, &prof, settings)
}

/// Condition 1 over the simplex grid, the two-class embeddings and any
/// loss-specific distributions.
pub fn check_condition_1(
    loss: &LossSpec,
    eps_grid: &[f64],
    resolution: usize,
    settings: &OptimizerSettings,
    tol: f64,
) -> Result<ConditionReport> {
    loss.validate()?;
    if loss.k() > 4 {
        return Err(Error::Unsupported("condition 1 audit needs K ≤ 4".into()));
    }
    let e_min = eps_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut ps = simplex_grid(loss.k(), resolution);
    for &e in eps_grid {
        ps.extend(injected_candidates(loss, e));
    }
    let mut tally = Tally::new();
    for p in &ps {
        let spread = p.max() - p.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
        if spread < e_min - GAP_TOL {
            continue;
        }
        let prof = match class_profile(loss, p, settings) {
            Ok(prof) => prof,
            Err(e) => {
                tally.fail(&e);
                continue;
            }
        };
        for &e in eps_grid {
            match c1_from_profile(loss, e, p, &prof, settings) {
                Ok(Some((m, w))) => tally.record(m, w),
                Ok(None) => {}
                Err(err) => tally.fail(&err),
            }
        }
    }
    let grids = GridInfo { eps: eps_grid.to_vec(), resolution: Some(resolution), pair_step: None };
    Ok(tally.finish(ConditionId::C1, loss.to_string(), tol, grids, settings.seed))
}

/// inf over s ∈ M(S, i) ∩ M(S, j) of R(s, p) − inf{R(s′, p) : s′_k = s_k, k ∉ {i, j}}.
fn pairing_lhs(loss: &LossSpec, i: usize, j: usize, p: &[f64], settings: &OptimizerSettings) -> Result<(f64, Vec<f64>)> {
    let k = loss.k();
    let risk = |s: &[f64]| loss.risk(s, p);
    let inner_settings = settings.with_restarts(1);
    let global = if k == 2 { Some(checked(minimize_over_scores(risk, &loss.score_set, &[], settings)?, "risk")?.value) } else { None };
    let inner = |s: &[f64]| -> f64 {
        if let Some(g) = global {
            return g;
        }
        let fixes: Vec<Constraint> = (0..k).filter(|&m| m != i && m != j).map(|m| Constraint::fix(k, m, s[m])).collect();
        match minimize_over_scores_from(risk, &loss.score_set, &fixes, &inner_settings, &[s.to_vec()]) {
            Ok(r) if !r.unbounded => r.value,
            _ => f64::NAN,
        }
    };
    let outer = minimize_over_scores(
        |s: &[f64]| risk(s) - inner(s),
        &loss.score_set,
        &Constraint::argmax_pair(k, i, j),
        settings,
    )?;
    Ok((outer.value, outer.minimizer))
}

/// Condition 2 at one (i, j, p): left side minus the binary pseudo-risk gap.
pub fn c2_margin(
    loss: &LossSpec,
    adj: Adjustment,
    i: usize,
    j: usize,
    p: &[f64],
    settings: &OptimizerSettings,
) -> Result<(f64, Witness)> {
    let (lhs, s) = pairing_lhs(loss, i, j, p, settings)?;
    let (rhs, _, _) = binary_gap(&loss.with_classes(2), adj, p[i], p[j], settings)?;
    let w = Witness { p: Some(p.to_vec()), s: Some(s), classes: Some((i, j)), lhs: Some(lhs), rhs: Some(rhs), ..Default::default() };
    Ok((lhs - rhs, w))
}

fn random_triples(k: usize, n: usize, seed: u64) -> Vec<(usize, usize, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|m| {
            let i = rng.random_range(0..k);
            let j = (i + rng.random_range(1..k)) % k;
            let p = random_distribution(&mut rng, k, m % 4 == 3);
            (i, j, p)
        })
        .collect()
}

/// Condition 2 on `samples` random (i, j, p) triples.
pub fn check_condition_2(
    loss: &LossSpec,
    adj: Adjustment,
    samples: usize,
    seed: u64,
    settings: &OptimizerSettings,
    tol: f64,
) -> Result<ConditionReport> {
    loss.validate()?;
    let mut tally = Tally::new();
    for (i, j, p) in random_triples(loss.k(), samples, seed) {
        match c2_margin(loss, adj, i, j, &p, settings) {
            Ok((m, w)) => tally.record(m, w),
            Err(e) => tally.fail(&e),
        }
    }
    Ok(tally.finish(ConditionId::C2, loss.to_string(), tol, GridInfo::default(), seed))
}

/// The gap condition at one pair: binary pseudo-risk gap minus ζ.
pub fn c34_margin(loss: &LossSpec, adj: Adjustment, zeta: f64, p1: f64, p2: f64, settings: &OptimizerSettings) -> Result<(f64, Witness)> {
    let (lhs, _, _) = binary_gap(&loss.with_classes(2), adj, p1, p2, settings)?;
    let w = Witness { pair: Some((p1, p2)), eps: Some(p1 - p2), lhs: Some(lhs), rhs: Some(zeta), ..Default::default() };
    Ok((lhs - zeta, w))
}

/// Conditions 3 (custom ζ) and 4 (ζ = δ_binary) over the pair grid, on pairs
/// with p₁ > p₂.
pub fn check_condition_3_4(
    loss: &LossSpec,
    adj: Adjustment,
    zeta: Zeta<'_>,
    pair_step: f64,
    settings: &OptimizerSettings,
    tol: f64,
) -> Result<ConditionReport> {
    loss.validate()?;
    let mut cache: HashMap<i64, Result<f64>> = HashMap::new();
    let mut tally = Tally::new();
    for (p1, p2) in pair_grid(pair_step)? {
        let gap = p1 - p2;
        if gap <= GAP_TOL {
            continue;
        }
        let z = match zeta {
            Zeta::Custom(f) => Ok(f(gap)),
            Zeta::DeltaBinary => cache
                .entry((gap * 1e9).round() as i64)
                .or_insert_with(|| delta_binary_definition(loss, gap, settings).map(|d| d.value))
                .clone(),
        };
        match z.and_then(|z| c34_margin(loss, adj, z, p1, p2, settings)) {
            Ok((m, w)) => tally.record(m, w),
            Err(e) => tally.fail(&e),
        }
    }
    let id = match zeta {
        Zeta::DeltaBinary => ConditionId::C4,
        Zeta::Custom(_) => ConditionId::C3,
    };
    let grids = GridInfo { pair_step: Some(pair_step), ..Default::default() };
    Ok(tally.finish(id, loss.to_string(), tol, grids, settings.seed))
}

const ZHANG_INF_RADIUS: f64 = 20.0;

fn zhang_psi(loss: &LossSpec) -> Result<Psi> {
    match loss.family {
        Family::Zhang if loss.outer == Outer::Identity => Ok(loss.psi),
        Family::LR => Ok(Psi::NegLog),
        _ => Err(Error::Unsupported(format!("ZhangInf applies to decoupled Zhang losses and LR, not {loss}"))),
    }
}

/// inf of R′((t, t), (w, w)) over tied binary scores with t ≥ t_min; NaN
/// when no tied score of the set qualifies.
fn tied_inner(bin: &LossSpec, adj: Adjustment, w: f64, t_min: f64, radius: f64) -> f64 {
    let f = |t: f64| bin.pseudo(adj, &[t, t], &[w, w]);
    let fixed = |t: f64| if t >= t_min - 1e-12 { f(t) } else { f64::NAN };
    match bin.score_set.kind {
        ScoreSetKind::Simplex => fixed(0.5),
        ScoreSetKind::SumToZero | ScoreSetKind::BoxedSumToZero => fixed(0.0),
        ScoreSetKind::Full | ScoreSetKind::Nonnegative => {
            let floor = if bin.score_set.kind == ScoreSetKind::Full { -radius } else { 0.0 };
            let lo = t_min.max(floor);
            if lo > radius {
                return f64::NAN;
            }
            golden_section(f, lo, radius, 1e-12).1.min(f(lo))
        }
    }
}

/// ZhangInf at one pair: the unconstrained sup-inf minus the sup-inf whose
/// inner infimum is restricted to tied scores with ψ(s₁) ≤ mean ψ(s′).
/// Always ≤ 0 up to optimizer error; negative means the restriction matters.
/// The outer search stays within radius 20: further out both sides exceed
/// 1e8 and their difference is rounding noise.
pub fn zhang_inf_margin(loss: &LossSpec, p1: f64, p2: f64, settings: &OptimizerSettings) -> Result<(f64, Witness)> {
    let psi = zhang_psi(loss)?;
    let settings = &OptimizerSettings { box_radius: settings.box_radius.min(ZHANG_INF_RADIUS), ..*settings };
    let bin = loss.with_classes(2);
    let adj = Adjustment::Natural;
    let pb = 0.5 * (p1 + p2);
    let r0 = binary_inf(&bin, adj, [pb, pb], settings)?;
    let r1 = binary_inf(&bin, adj, [p1, p2], settings)?;
    let lhs = r0.value - r1.value;
    let radius = settings.box_radius;
    let g = |s: &[f64]| -> f64 {
        let v = 0.5 * (psi.eval(s[0]) + psi.eval(s[1]));
        let inner = tied_inner(&bin, adj, pb, psi.level_inverse(v), radius);
        inner - bin.pseudo(adj, s, &[p1, p2])
    };
    let best = minimize_over_scores_from(|s: &[f64]| -g(s), &bin.score_set, &[], settings, std::slice::from_ref(&r1.minimizer))?;
    let (rhs, s) = if -best.value >= g(&r1.minimizer) || g(&r1.minimizer).is_nan() {
        (-best.value, best.minimizer)
    } else {
        (g(&r1.minimizer), r1.minimizer)
    };
    let w = Witness { pair: Some((p1, p2)), s: Some(s), lhs: Some(lhs), rhs: Some(rhs), ..Default::default() };
    Ok((lhs - rhs, w))
}

/// ZhangInf over the pair grid (every pair with p₁ ≥ p₂, p₁ > 0).
pub fn check_zhang_inf(loss: &LossSpec, pair_step: f64, settings: &OptimizerSettings, tol: f64) -> Result<ConditionReport> {
    loss.validate()?;
    zhang_psi(loss)?;
    let mut tally = Tally::new();
    for (p1, p2) in pair_grid(pair_step)? {
        match zhang_inf_margin(loss, p1, p2, settings) {
            Ok((m, w)) => tally.record(m, w),
            Err(e) => tally.fail(&e),
        }
    }
    let grids = GridInfo { pair_step: Some(pair_step), ..Default::default() };
    Ok(tally.finish(ConditionId::ZhangInf, loss.to_string(), tol, grids, settings.seed))
}

/// inf over θ ≥ 0 of R′((θ, θ), (p̄, p̄)) − inf_u R′((θ + u, θ − u), (p₁, p₂)),
/// with the two-class pseudo-risk evaluated off the score set. Returns the
/// value and the minimising θ.
pub fn theta_problem(loss: &LossSpec, adj: Adjustment, p1: f64, p2: f64, settings: &OptimizerSettings) -> (f64, f64) {
    let bin = loss.with_classes(2);
    let pb = 0.5 * (p1 + p2);
    let obj = |theta: f64| -> f64 {
        let inner = minimize_1d(|u| bin.pseudo(adj, &[theta + u, theta - u], &[p1, p2]), settings).value;
        bin.pseudo(adj, &[theta, theta], &[pb, pb]) - inner
    };
    // past θ = 20 an exponential φ is ~e^20 and the difference is rounding noise
    let mut grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
    grid.extend([15.0, 20.0]);
    let vals: Vec<f64> = grid.iter().map(|&t| obj(t)).collect();
    let ib = (0..grid.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    let lo = if ib == 0 { 0.0 } else { grid[ib - 1] };
    let hi = if ib + 1 < grid.len() { grid[ib + 1] } else { grid[ib] };
    let (t, v) = golden_section(obj, lo, hi, 1e-10);
    if v < vals[ib] {
        (v, t)
    } else {
        (vals[ib], grid[ib])
    }
}

/// inf_{S₀} R′(·, (p̄, p̄)) − inf_{S₀} R′(·, (p₁, p₂)) for two classes.
fn two_sided(loss: &LossSpec, adj: Adjustment, p1: f64, p2: f64, settings: &OptimizerSettings) -> f64 {
    let bin = loss.with_classes(2);
    let pb = 0.5 * (p1 + p2);
    let a = minimize_1d(|t| bin.pseudo(adj, &[t, -t], &[pb, pb]), settings).value;
    let b = minimize_1d(|t| bin.pseudo(adj, &[t, -t], &[p1, p2]), settings).value;
    a - b
}

/// Condition 7 at one pair: θ-problem minus the two-sided gap.
pub fn c7_margin(loss: &LossSpec, adj: Adjustment, p1: f64, p2: f64, settings: &OptimizerSettings) -> (f64, Witness) {
    let (theta, t) = theta_problem(loss, adj, p1, p2, settings);
    let ts = two_sided(loss, adj, p1, p2, settings);
    let w = Witness { pair: Some((p1, p2)), s: Some(vec![t, t]), lhs: Some(theta), rhs: Some(ts), ..Default::default() };
    (theta - ts, w)
}

/// Condition 6 at one (i, j, p): the pairing left side minus the θ-problem.
pub fn c6_margin(
    loss: &LossSpec,
    adj: Adjustment,
    i: usize,
    j: usize,
    p: &[f64],
    settings: &OptimizerSettings,
) -> Result<(f64, Witness)> {
    let (lhs, s) = pairing_lhs(loss, i, j, p, settings)?;
    let (rhs, _) = theta_problem(loss, adj, p[i], p[j], settings);
    let w = Witness { p: Some(p.to_vec()), s: Some(s), classes: Some((i, j)), lhs: Some(lhs), rhs: Some(rhs), ..Default::default() };
    Ok((lhs - rhs, w))
}

/// Conditions 6 and 7 for a loss on the sum-to-zero set. For smooth φ other
/// than exponential and squared, the condition 7 report is labelled as the
/// conjecture probe and never claims to hold.
pub fn check_condition_6_7(
    loss: &LossSpec,
    adj: Adjustment,
    pair_step: f64,
    samples: usize,
    seed: u64,
    settings: &OptimizerSettings,
    tol: f64,
) -> Result<(ConditionReport, ConditionReport)> {
    loss.validate()?;
    if loss.score_set.kind != ScoreSetKind::SumToZero {
        return Err(Error::Unsupported(format!("conditions 6 and 7 need the sum-to-zero set, {loss} uses {}", loss.score_set)));
    }
    let mut c6 = Tally::new();
    for (i, j, p) in random_triples(loss.k(), samples, seed) {
        match c6_margin(loss, adj, i, j, &p, settings) {
            Ok((m, w)) => c6.record(m, w),
            Err(e) => c6.fail(&e),
        }
    }
    let mut c7 = Tally::new();
    for (p1, p2) in pair_grid(pair_step)? {
        let (m, w) = c7_margin(loss, adj, p1, p2, settings);
        c7.record(m, w);
    }
    let probe = loss.phi.is_smooth() && !matches!(loss.phi.kind, PhiKind::Exponential | PhiKind::Squared);
    let grids = GridInfo { pair_step: Some(pair_step), ..Default::default() };
    let r6 = c6.finish(ConditionId::PairingSumToZero, loss.to_string(), tol, GridInfo::default(), seed);
    let id = if probe { ConditionId::Conjecture1Probe } else { ConditionId::FreeLunch };
    let mut r7 = c7.finish(id, loss.to_string(), tol, grids, seed);
    if probe && r7.verdict == Verdict::HoldsOnSamples {
        r7.verdict = Verdict::Inconclusive;
        r7.notes.push(format!("no violation found (margin {:.3e}); unproven for {}", r7.margin, loss.phi));
    }
    Ok((r6, r7))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::Transform;

    fn st() -> OptimizerSettings {
        OptimizerSettings::default().with_restarts(3)
    }

    #[test]
    fn pair_grid_shape() {
        let g = pair_grid(0.25).unwrap();
        assert!(g.contains(&(0.5, 0.5)) && g.contains(&(1.0, 0.0)) && !g.contains(&(0.75, 0.5)));
        assert!(g.iter().all(|(a, b)| a >= b && a + b <= 1.0 + 1e-12));
    }

    #[test]
    fn condition_1_llw_hinge_point() {
        let loss = LossSpec::llw(Transform::hinge(), 3);
        let p = Distribution::new(vec![0.5, 0.3, 0.2]).unwrap();
        let (m, _) = c1_margin(&loss, 0.25, &p, &st()).unwrap().unwrap();
        assert!(m.abs() < 1e-6, "{m}");
    }

    #[test]
    fn condition_2_binary_is_trivial() {
        let loss = LossSpec::zzh(Transform::logistic(), 2);
        let (m, _) = c2_margin(&loss, Adjustment::Natural, 0, 1, &[0.7, 0.3], &st()).unwrap();
        assert!(m.abs() < 1e-6, "{m}");
    }

    #[test]
    fn gap_condition_degenerate_pair() {
        let loss = LossSpec::llw(Transform::hinge(), 3);
        let (m, w) = c34_margin(&loss, Adjustment::Natural, 0.0, 0.3, 0.3, &st()).unwrap();
        assert!(m.abs() < 1e-9 && w.lhs.unwrap().abs() < 1e-9);
    }

    #[test]
    fn free_lunch_hinge_point() {
        let loss = LossSpec::llw(Transform::hinge(), 3);
        let (m, _) = c7_margin(&loss, Adjustment::Natural, 0.6, 0.2, &st());
        assert!(m.abs() < 1e-6, "{m}");
    }

    #[test]
    fn zhang_inf_exp_point() {
        let loss = LossSpec::zhang(Psi::NegIdentity, Transform::exponential(), Outer::Identity, 3);
        let (m, _) = zhang_inf_margin(&loss, 0.6, 0.2, &st()).unwrap();
        assert!(m > -1e-6, "{m}");
    }
}

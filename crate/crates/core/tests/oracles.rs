//! Hand-computed values checked against the library.

use calibkit::calibration::{class_profile, delta_max_pointwise};
use calibkit::conversion::zhang_constant;
use calibkit::losses::{Adjustment, Distribution, LossSpec, Outer, Psi, RrkaSum, Transform};
use calibkit::optimize::{minimize_1d, minimize_over_scores, Constraint, OptimizerSettings};

fn near(a: f64, b: f64, tol: f64) {
    assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
}

fn dist(p: &[f64]) -> Distribution {
    Distribution::new(p.to_vec()).unwrap()
}

#[test]
fn rrka_full_sum_at_the_origin() {
    // φ(−0) + Σ_k φ(0) with φ(0) = 1, for every label
    let l = LossSpec::rrka(Transform::squared(), 3).with_rrka_sum(RrkaSum::All);
    near(l.pointwise_risk(&[0.0; 3], &Distribution::uniform(3)).unwrap(), 4.0, 1e-12);
    let ova = LossSpec::rrka(Transform::squared(), 3);
    near(ova.pointwise_risk(&[0.0; 3], &Distribution::uniform(3)).unwrap(), 3.0, 1e-12);
}

#[test]
fn pseudo_risk_by_hand() {
    // l = Σφ = 2 at s = 0; each L(s, k) = φ(0) = 1, so 2 + 0.6·(1 − 2)
    let llw = LossSpec::llw(Transform::hinge(), 2);
    near(llw.pseudo_risk(Adjustment::SumPhi, &[0.0, 0.0], &[0.3, 0.3]).unwrap(), 1.4, 1e-12);
    // brute evaluation of the same expansion
    let l: f64 = [0.0f64, 0.0].iter().map(|&s| (1.0 + s).max(0.0)).sum();
    let brute = l + (0..2).map(|y| 0.3 * (llw.eval_loss(&[0.0, 0.0], y).unwrap() - l)).sum::<f64>();
    near(brute, 1.4, 1e-12);

    let z = LossSpec::zhang(Psi::NegIdentity, Transform::exponential(), Outer::Identity, 2);
    near(z.pseudo_risk(Adjustment::Natural, &[0.0, 0.0], &[0.5, 0.5]).unwrap(), 2.0, 1e-12);
}

#[test]
fn one_dimensional_minimum() {
    let f = |t: f64| 1.5 * t.exp() + 0.5 * (-t).exp();
    let r = minimize_1d(f, &OptimizerSettings::default());
    // f′ = 0 at e^{2t} = 1/3
    near(r.minimizer[0], 0.5 * (1.0f64 / 3.0).ln(), 1e-6);
    near(r.value, 2.0 * 0.75f64.sqrt(), 1e-10);
    let grid = (0..=400_000).map(|i| -2.0 + i as f64 * 1e-5).map(f).fold(f64::INFINITY, f64::min);
    near(r.value, grid, 1e-9);
}

#[test]
fn tied_minimum_matches_dense_grid() {
    let l = LossSpec::llw(Transform::hinge(), 3);
    let p = dist(&[0.2, 0.3, 0.5]);
    let st = OptimizerSettings::default();
    let r = minimize_over_scores(|s| l.pointwise_risk(s, &p).unwrap(), &l.score_set, &Constraint::argmax_pair(3, 0, 1), &st).unwrap();
    // s = (a, a, −2a) with a ≥ −2a, inside [−3, 3]³
    let risk = |s: &[f64]| -> f64 { (0..3).map(|j| (1.0 - p.as_slice()[j]) * (1.0 + s[j]).max(0.0)).sum() };
    let grid = (0..=150).map(|i| i as f64 * 0.01).map(|a| risk(&[a, a, -2.0 * a])).fold(f64::INFINITY, f64::min);
    near(grid, 2.0, 1e-12);
    near(r.value, grid, 1e-6);
}

#[test]
fn binary_conditional_risk_curves() {
    let st = OptimizerSettings::default();
    let at = |z: &calibkit::conversion::ZhangConstant, p: f64| z.v.iter().find(|(q, _)| (q - p).abs() < 1e-9).unwrap().1;

    let sq = zhang_constant(&Transform::squared(), 0.01, &st).unwrap();
    for (p, v) in [(0.25, 0.75), (0.5, 1.0), (0.75, 0.75)] {
        near(at(&sq, p), v, 1e-8);
    }
    near(sq.c_prime, 8.0, 1e-4);

    let ex = zhang_constant(&Transform::exponential(), 0.01, &st).unwrap();
    near(at(&ex, 0.5), 1.0, 1e-8);
    near(at(&ex, 0.2), 2.0 * (0.2f64 * 0.8).sqrt(), 1e-8);

    let hi = zhang_constant(&Transform::hinge(), 0.01, &st).unwrap();
    near(at(&hi, 0.3), 0.6, 1e-8);
    assert!(hi.c.is_none());
}

#[test]
fn llw_squared_three_class_witness() {
    // Σ_k w_k (1 + s_k)² on the sum-to-zero plane, w = 1 − p: free minimum
    // 9 / Σ 1/w_k; the tied and class-0 faces all end at s = 0 with risk Σ w = 2
    let p = [0.05, 0.4, 0.55];
    let inv: f64 = p.iter().map(|x| 1.0 / (1.0 - x)).sum();
    let hand = 2.0 - 9.0 / inv;
    let l = LossSpec::llw(Transform::squared(), 3);
    let d = delta_max_pointwise(&l, 0.5, &dist(&p), &OptimizerSettings::default()).unwrap();
    near(d.value, hand, 1e-6);
    assert!(hand < 0.25);
}

#[test]
fn logistic_minimum_is_the_entropy() {
    let p = [0.5f64, 0.3, 0.2];
    let h: f64 = -p.iter().map(|x| x * x.ln()).sum::<f64>();
    let st = OptimizerSettings::default();
    for l in [LossSpec::lr(3), LossSpec::coupled_logistic(3)] {
        let prof = class_profile(&l, &dist(&p), &st).unwrap();
        near(prof.m[0], h, 1e-4);
    }
    let two = class_profile(&LossSpec::lr(2), &Distribution::uniform(2), &st).unwrap();
    near(two.m[1], 2f64.ln(), 1e-6);
}

#[test]
fn domination_example() {
    // (1 + s_0)₊ + (1 + s_1)₊ at s = (1, −0.5, −0.5)
    let l = LossSpec::llw(Transform::hinge(), 3);
    near(l.eval_loss(&[1.0, -0.5, -0.5], 2).unwrap(), 2.5, 1e-12);
}

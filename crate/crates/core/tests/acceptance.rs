//! The nine acceptance criteria, each printed as one pass/fail line.
//!
//! Runs without the test harness so every line is printed. A criterion
//! passes when every sub-check passes. Sub-checks listed in
//! `known_red` are expected to fail; for those criteria the test asserts
//! that exactly the listed sub-checks fail, so a new failure or an
//! unexpected recovery both break the build.

use std::time::Instant;

use calibkit::calibration::{
    class_profile, delta_binary_definition, delta_binary_numeric, delta_max_global_curve, CalibrationCurve, CurveMethod,
};
use calibkit::conditions::{
    check_condition_1, check_condition_2, check_condition_3_4, check_condition_6_7, check_zhang_inf, AuditConfig,
    ConditionReport, Zeta,
};
use calibkit::conversion::{convert_calibrated, convert_mtnc, zhang_constant, RiskBoundInput};
use calibkit::experiments::{
    default_erm_curve, erm_records, kink_counterexample, logistic_equivalence, reproduce_table2, simulate_erm,
    ExperimentResult, SyntheticProblem,
};
use calibkit::losses::{Adjustment, Family, LossSpec, Outer, PhiKind, Psi, Transform};
use calibkit::optimize::{simplex_grid, OptimizerSettings};
use calibkit::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Criterion {
    id: usize,
    title: &'static str,
    failed: Vec<String>,
    info: Vec<String>,
    checks: usize,
}

impl Criterion {
    fn new(id: usize, title: &'static str) -> Self {
        Criterion { id, title, failed: Vec::new(), info: Vec::new(), checks: 0 }
    }

    fn check(&mut self, name: impl Into<String>, ok: bool) {
        self.checks += 1;
        if !ok {
            self.failed.push(name.into());
        }
    }

    fn experiment(&mut self, r: &ExperimentResult) {
        for d in &r.details {
            self.check(d.name.clone(), d.pass);
        }
    }

    fn report(&mut self, label: &str, r: &ConditionReport, expect_holds: bool) {
        let ok = if expect_holds { r.holds() } else { r.violated() };
        self.check(format!("{} {label}", r.condition_id), ok);
        if !ok {
            self.info.push(format!("{} {label}: {} (margin {:.3e})", r.condition_id, r.verdict, r.margin));
        }
    }

    /// Prints the criterion line; true when the failures equal `known_red`.
    fn finish(self, known_red: &[&str]) -> bool {
        let pass = self.failed.is_empty();
        let status = if pass {
            "PASS".to_string()
        } else if known_red.is_empty() {
            "FAIL".to_string()
        } else {
            format!("FAIL (known red: {})", self.failed.join("; "))
        };
        println!("criterion {}: {status} - {} [{} checks]", self.id, self.title, self.checks);
        for i in &self.info {
            println!("    {i}");
        }
        let mut got: Vec<&str> = self.failed.iter().map(String::as_str).collect();
        let mut want = known_red.to_vec();
        got.sort_unstable();
        want.sort_unstable();
        if got != want {
            println!("    unexpected: failed {got:?}, known red {want:?}");
        }
        got == want
    }
}

fn eps_nine() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

fn binary_delta(loss: &LossSpec, eps: f64, st: &OptimizerSettings) -> f64 {
    match delta_binary_definition(&loss.with_classes(2), eps, st) {
        Ok(d) => d.value,
        Err(Error::NotCalibrated) => 0.0,
        Err(e) => panic!("δ_binary of {loss} at {eps}: {e}"),
    }
}

fn criterion_1() -> bool {
    let mut c = Criterion::new(1, "binary calibration table, numeric vs closed form");
    let st = OptimizerSettings::default();
    let t = Instant::now();
    let r = reproduce_table2(&eps_nine(), &st).unwrap();
    c.experiment(&r);
    // at τ = 1 the exact kink curve is the plain ε of the printed table
    let kink1 = Transform::kink(1.0);
    let dev = eps_nine().iter().map(|&e| (delta_binary_numeric(&kink1, e, &st).unwrap().value - e).abs()).fold(0.0, f64::max);
    c.check("kink(1): numeric equals ε", dev <= 1e-6);
    let secs = t.elapsed().as_secs_f64();
    c.check("runtime < 10 s", secs < 10.0);
    c.info.push(format!("runtime {secs:.2} s"));
    let sigmoid = r.details.iter().find(|d| d.name.starts_with("sigmoid")).unwrap();
    c.info.push(format!("sigmoid numeric curve is ε/2: worst |Δ| = {:.3}", -sigmoid.margin));
    c.finish(&["sigmoid: numeric vs closed form"])
}

fn criterion_2() -> bool {
    let mut c = Criterion::new(2, "two-class tightness of the grid oracle");
    let st = OptimizerSettings::default();
    let grid = [0.25, 0.5, 0.75];
    let t = Instant::now();
    for phi in [Transform::hinge(), Transform::squared(), Transform::exponential(), Transform::logistic()] {
        for loss in [LossSpec::zzh(phi, 2), LossSpec::llw(phi, 2), LossSpec::rrka(phi, 2)] {
            let dm = delta_max_global_curve(&loss, &grid, 200, &st).unwrap();
            for (d, &e) in dm.iter().zip(&grid) {
                let b = binary_delta(&loss, e, &st);
                c.check(format!("{loss} at ε = {e}: |{:.5} − {b:.5}| ≤ 5e-3", d.value), (d.value - b).abs() <= 5e-3);
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    c.check("runtime < 60 s", secs < 60.0);
    c.info.push(format!("runtime {secs:.2} s"));
    c.finish(&[])
}

fn criterion_3() -> bool {
    let mut c = Criterion::new(3, "three-class oracle dominates the binary curve");
    let st = OptimizerSettings::default();
    let grid = [0.25, 0.5, 0.75];
    let t = Instant::now();
    let losses = [
        LossSpec::llw(Transform::hinge(), 3),
        LossSpec::llw(Transform::squared(), 3),
        LossSpec::llw(Transform::exponential(), 3),
        LossSpec::lr(3),
        LossSpec::rrka(Transform::squared(), 3),
        LossSpec::liu(3),
        LossSpec::zhang(Psi::NegIdentity, Transform::exponential(), Outer::Identity, 3),
    ];
    for loss in losses {
        let dm = delta_max_global_curve(&loss, &grid, 20, &st).unwrap();
        let mut line = format!("{loss}:");
        for (d, &e) in dm.iter().zip(&grid) {
            let b = binary_delta(&loss, e, &st);
            c.check(format!("{loss} at ε = {e}"), d.value >= b - 2e-2);
            line.push_str(&format!(" ε={e}: {:.4} vs {b:.4};", d.value));
            if loss.family == Family::LLW {
                line.push_str(&format!(" (binary at ε/2: {:.4})", binary_delta(&loss, e / 2.0, &st)));
            }
        }
        c.info.push(line);
    }
    // p = (0.05, 0.4, 0.55) with φ squared: the constrained minimum sits at s = 0
    // (risk 2), the free one at 9 / Σ 1/(1 − p_k), so δ ≤ 0.1787 < 0.25.
    let w: f64 = [0.95f64, 0.6, 0.45].iter().map(|x| 1.0 / x).sum();
    c.info.push(format!("LLW squared hand witness at ε = 0.5: δ ≤ {:.4}", 2.0 - 9.0 / w));
    let secs = t.elapsed().as_secs_f64();
    c.check("runtime < 5 min", secs < 300.0);
    c.info.push(format!("runtime {secs:.2} s"));
    c.finish(&[
        "LLW[phi=squared] K=3 at ε = 0.5",
        "LLW[phi=exponential] K=3 at ε = 0.5",
        "LLW[phi=exponential] K=3 at ε = 0.75",
    ])
}

fn criterion_4() -> bool {
    let mut c = Criterion::new(4, "kink counterexample");
    let r = kink_counterexample(&OptimizerSettings::default()).unwrap();
    c.experiment(&r);
    c.finish(&[])
}

fn criterion_5() -> bool {
    let mut c = Criterion::new(5, "curvature constant and the squared-loss bound");
    let st = OptimizerSettings::default();
    let z = zhang_constant(&Transform::squared(), 0.01, &st).unwrap();
    let cc = z.c.unwrap_or(f64::NAN);
    c.check(format!("c(squared) = {cc:.6} ≈ √2"), (cc - 2f64.sqrt()).abs() <= 1e-3);
    let loss = LossSpec::rrka(Transform::squared(), 3);
    let eps_grid = AuditConfig::default().eps_grid;
    let mut worst = f64::INFINITY;
    for dist in simplex_grid(3, 20) {
        let p = dist.as_slice();
        let gap = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - p.iter().cloned().fold(f64::INFINITY, f64::min);
        let prof = class_profile(&loss, &dist, &st).unwrap();
        for &e in &eps_grid {
            if gap + 1e-12 >= e {
                let d = prof.delta(e).unwrap();
                let m = d - (2f64.sqrt() * e * e - 2e-2);
                worst = worst.min(m);
                if m < 0.0 {
                    c.check(format!("δ(ε = {e}, p = {p:?}) = {d:.4} ≥ √2ε² − 2e-2"), false);
                }
            }
        }
    }
    c.check("pointwise bound on the grid", worst >= 0.0);
    c.info.push(format!("worst margin over the grid {worst:.4}"));
    c.finish(&[])
}

fn criterion_6() -> bool {
    let mut c = Criterion::new(6, "coupled and decoupled logistic forms agree");
    let r = logistic_equivalence(3, 20, &OptimizerSettings::default()).unwrap();
    c.experiment(&r);
    c.finish(&[])
}

fn criterion_7() -> bool {
    let mut c = Criterion::new(7, "condition regression suite");
    let st = OptimizerSettings::default().with_restarts(4);
    let cfg = AuditConfig::default();
    let res = cfg.resolution_for(3);
    let nat = Adjustment::Natural;
    let exp = Transform::exponential();
    let zhang_exp = LossSpec::zhang(Psi::NegIdentity, exp, Outer::Identity, 3);
    let rrka_sq = LossSpec::rrka(Transform::squared(), 3);
    let lr = LossSpec::lr(3);
    let llw = [
        ("LLW hinge", LossSpec::llw(Transform::hinge(), 3)),
        ("LLW exponential", LossSpec::llw(exp, 3)),
        ("LLW logistic", LossSpec::llw(Transform::logistic(), 3)),
    ];
    let c1 = |l: &LossSpec| check_condition_1(l, &cfg.eps_grid, res, &st, cfg.tol).unwrap();
    let c2 = |l: &LossSpec| check_condition_2(l, nat, cfg.pairing_samples, cfg.seed, &st, cfg.tol).unwrap();
    let c4 = |l: &LossSpec| check_condition_3_4(l, nat, Zeta::DeltaBinary, cfg.pair_step, &st, cfg.tol).unwrap();
    let zi = |l: &LossSpec| check_zhang_inf(l, cfg.pair_step, &st, cfg.tol).unwrap();

    for (label, l) in [("Zhang exp", &zhang_exp), ("RRKA squared", &rrka_sq), ("LR", &lr)] {
        c.report(label, &c1(l), true);
        c.report(label, &c2(l), true);
        c.report(label, &c4(l), true);
    }
    for (label, l) in &llw {
        c.report(label, &c1(l), true);
        c.report(label, &c4(l), true);
        let (r6, r7) = check_condition_6_7(l, nat, cfg.pair_step, cfg.pairing_samples, cfg.seed, &st, cfg.tol).unwrap();
        c.report(label, &r6, true);
        if *label != "LLW logistic" {
            c.report(label, &r7, true);
        }
        // the halved ζ the pairing argument actually delivers
        let b = l.with_classes(2);
        let half = move |e: f64| binary_delta(&b, e / 2.0, &OptimizerSettings::default());
        let r3 = check_condition_3_4(l, nat, Zeta::Custom(&half), cfg.pair_step, &st, cfg.tol).unwrap();
        c.info.push(format!("{label}, C3 with ζ(ε) = δ_binary(ε/2): {} (margin {:.3e})", r3.verdict, r3.margin));
    }

    let id = Transform::new(PhiKind::Identity);
    let zh = |psi, phi| LossSpec::zhang(psi, phi, Outer::Identity, 3);
    let rows = [
        ("ψ=−t, φ=exp", zh(Psi::NegIdentity, exp)),
        ("ψ=−ln t, φ=t", zh(Psi::NegLog, id)),
        ("ψ=−t^a/a a=0.25, φ=t", zh(Psi::NegPower(0.25), id)),
        ("ψ=−t^a/a a=0.5, φ=t", zh(Psi::NegPower(0.5), id)),
        ("ψ=−t, φ=logistic", zh(Psi::NegIdentity, Transform::logistic())),
        ("ψ=−t, φ=|t|^a/a a=2", zh(Psi::NegIdentity, Transform::abs_power(2.0))),
        ("ψ=−t, φ=|t|^a/a a=3", zh(Psi::NegIdentity, Transform::abs_power(3.0))),
        ("ψ=−t, φ=(t)+^a/a a=2", zh(Psi::NegIdentity, Transform::plus_power(2.0))),
        ("ψ=−t, φ=(t)+^a/a a=3", zh(Psi::NegIdentity, Transform::plus_power(3.0))),
        ("ψ=−t, φ=(2t+1)²", zh(Psi::NegIdentity, Transform::affine_square(2.0, 1.0))),
        ("LR", lr),
    ];
    for (label, l) in &rows {
        c.report(label, &zi(l), true);
    }
    c.report("ψ=−t^a/a a=0.75, φ=t", &zi(&zh(Psi::NegPower(0.75), id)), false);
    for (label, l) in [
        ("ψ=−t, φ=|t|^a/a a=1.5", zh(Psi::NegIdentity, Transform::abs_power(1.5))),
        ("ψ=−t, φ=(t)+^a/a a=1.5", zh(Psi::NegIdentity, Transform::plus_power(1.5))),
    ] {
        let r = zi(&l);
        c.info.push(format!("ZhangInf {label} (outside the claimed range): {} (margin {:.3e})", r.verdict, r.margin));
    }
    c.finish(&["ZhangInf ψ=−t, φ=logistic", "C4 LLW exponential", "C4 LLW logistic"])
}

fn criterion_8() -> bool {
    let mut c = Criterion::new(8, "ERM pipeline");
    let st = OptimizerSettings::default();
    let hinge = LossSpec::llw(Transform::hinge(), 2);
    let curve = default_erm_curve(&hinge, &st).unwrap();
    let prob = SyntheticProblem::single(&[0.7, 0.3], 11);
    let r = simulate_erm(&prob, &hinge, &[10_000], 100, &curve, &st).unwrap();
    c.experiment(&r);

    let kink = LossSpec::llw(Transform::kink(0.5), 3);
    let kcurve = default_erm_curve(&kink, &st).unwrap();
    let kprob = SyntheticProblem::single(&[0.40, 0.35, 0.25], 12);
    let recs = erm_records(&kprob, &kink, &[100_000], 10, &kcurve, &st).unwrap();
    for r in &recs {
        c.check(format!("kink trial {}: true excess {:.4} ≥ 0.04", r.trial, r.true_excess), r.true_excess >= 0.04);
        c.check(format!("kink trial {}: surrogate excess {:.2e} < 1e-3", r.trial, r.surrogate_excess), r.surrogate_excess < 1e-3);
    }
    let worst = recs.iter().map(|r| r.surrogate_excess).fold(0.0, f64::max);
    c.info.push(format!("kink: true excess {:.4} in every trial, surrogate excess ≤ {worst:.2e}", recs[0].true_excess));
    c.finish(&[])
}

fn criterion_9() -> bool {
    let mut c = Criterion::new(9, "noise-condition conversion arithmetic");
    let grid: Vec<f64> = (1..=20).map(|i| i as f64 * 0.05).collect();
    let sq = CalibrationCurve::from_fn(CurveMethod::ClosedForm, &grid, |e| Ok(e * e)).unwrap();
    // α = 0, c = 1: threshold δ(ε/2), i.e. the curve with doubled grid
    let half_pts: Vec<(f64, f64)> = grid.iter().filter(|&&e| e <= 0.5 + 1e-12).map(|&e| (2.0 * e, e * e)).collect();
    let half = CalibrationCurve::from_pairs(CurveMethod::ClosedForm, &half_pts).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = rng.random_range(1e-4..0.25);
        let m = convert_mtnc(&sq, &RiskBoundInput { c: Some(1.0), alpha: Some(0.0), ..RiskBoundInput::excess(x) }).unwrap();
        let d = convert_calibrated(&half, &RiskBoundInput::excess(x)).unwrap();
        worst = worst.max((m.eps - d.eps).abs());
        let f = convert_mtnc(&sq, &RiskBoundInput { c: Some(1.0), alpha: Some(1.0), ..RiskBoundInput::excess(x) }).unwrap();
        c.check(format!("α = 1 at x = {x:.4}: {:.6} = 4x", f.eps), (f.eps - 4.0 * x).abs() <= 1e-6);
    }
    c.check(format!("α = 0 equals the half-argument inverse (worst {worst:.2e})"), worst <= 1e-6);
    c.finish(&[])
}

fn main() {
    let t = Instant::now();
    let all = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7, criterion_8, criterion_9];
    let ok = all.iter().filter(|f| f()).count();
    println!("acceptance: {ok}/{} criteria match their recorded status ({:.1} s)", all.len(), t.elapsed().as_secs_f64());
    if ok != all.len() {
        std::process::exit(1);
    }
}

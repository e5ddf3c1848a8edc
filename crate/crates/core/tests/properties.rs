use calibkit::calibration::{
    delta_binary_closed, delta_binary_numeric, generalized_inverse, CalibrationCurve, CurveMethod, CurvePoint,
};
use calibkit::losses::{permute, Distribution, LossSpec, Outer, PhiKind, Psi, RrkaSum, Transform};
use calibkit::optimize::OptimizerSettings;
use calibkit::spec_io::{loss_from_json, loss_to_json};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn convex_phi() -> impl Strategy<Value = Transform> + Clone {
    prop_oneof![
        Just(Transform::hinge()),
        Just(Transform::squared()),
        Just(Transform::exponential()),
        Just(Transform::logistic()),
        Just(Transform::new(PhiKind::TruncatedSquare)),
        Just(Transform::new(PhiKind::Modulus)),
        (1.0f64..3.0).prop_map(Transform::kink),
    ]
}

fn loss(k: usize) -> impl Strategy<Value = LossSpec> {
    let phi = convex_phi();
    prop_oneof![
        phi.clone().prop_map(move |p| LossSpec::ww(p, k)),
        phi.clone().prop_map(move |p| LossSpec::cs(p, k)),
        phi.clone().prop_map(move |p| LossSpec::llw(p, k)),
        phi.clone().prop_map(move |p| LossSpec::rrka(p, k)),
        phi.clone().prop_map(move |p| LossSpec::rrka(p, k).with_rrka_sum(RrkaSum::All)),
        phi.clone().prop_map(move |p| LossSpec::zzh(p, k)),
        phi.clone().prop_map(move |p| LossSpec::bskv(p, Outer::Identity, k)),
        phi.prop_map(move |p| LossSpec::zhang(Psi::NegIdentity, p, Outer::Identity, k)),
        Just(LossSpec::liu(k)),
    ]
}

fn perm(k: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..k).collect::<Vec<_>>()).prop_shuffle()
}

fn distribution(k: usize) -> impl Strategy<Value = Distribution> {
    prop::collection::vec(0.01f64..1.0, k).prop_map(|w| {
        let t: f64 = w.iter().sum();
        Distribution::new(w.into_iter().map(|x| x / t).collect()).unwrap()
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn losses_are_label_symmetric(l in loss(3), seed in any::<u64>(), pi in perm(3), y in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = l.score_set.sample(&mut rng, None);
        // relabelling scores and the label together leaves the loss unchanged
        let sp = permute(&s, &pi);
        let yp = pi.iter().position(|&j| j == y).unwrap();
        let a = l.eval_loss(&s, y).unwrap();
        let b = l.eval_loss(&sp, yp).unwrap();
        prop_assert!(close(a, b, 1e-12), "{l}: {a} vs {b} at {s:?}");
    }

    #[test]
    fn convex_losses_are_midpoint_convex(l in loss(3), seed in any::<u64>(), y in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = l.score_set.sample(&mut rng, None);
        let t = l.score_set.sample(&mut rng, None);
        let m: Vec<f64> = s.iter().zip(&t).map(|(a, b)| 0.5 * (a + b)).collect();
        let lhs = l.eval_loss(&m, y).unwrap();
        let rhs = 0.5 * (l.eval_loss(&s, y).unwrap() + l.eval_loss(&t, y).unwrap());
        prop_assert!(lhs <= rhs + 1e-9 * (1.0 + rhs.abs()), "{l}: {lhs} > {rhs}");
    }

    #[test]
    fn pointwise_risk_is_the_expected_loss(l in loss(4), seed in any::<u64>(), p in distribution(4)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = l.score_set.sample(&mut rng, None);
        let direct: f64 = (0..4).map(|y| p.as_slice()[y] * l.eval_loss(&s, y).unwrap()).sum();
        prop_assert!(close(l.pointwise_risk(&s, &p).unwrap(), direct, 1e-12));
    }

    #[test]
    fn binary_delta_is_monotone(phi in convex_phi(), a in 0.01f64..0.98, d in 0.001f64..0.5) {
        let b = (a + d).min(0.99);
        let da = delta_binary_closed(&phi, a).unwrap();
        let db = delta_binary_closed(&phi, b).unwrap();
        prop_assert!(da >= 0.0 && da <= db + 1e-15, "{phi}: δ({a}) = {da}, δ({b}) = {db}");
    }

    #[test]
    fn closed_form_matches_numeric(phi in convex_phi(), eps in 0.02f64..0.98) {
        let c = delta_binary_closed(&phi, eps).unwrap();
        let n = delta_binary_numeric(&phi, eps, &OptimizerSettings::default()).unwrap();
        prop_assert!((c - n.value).abs() < 1e-6, "{phi} at {eps}: {c} vs {}", n.value);
    }

    #[test]
    fn curve_envelope_is_monotone(raw in prop::collection::vec(0.0f64..2.0, 1..20)) {
        let n = raw.len();
        let pts: Vec<CurvePoint> = raw.iter().enumerate().map(|(i, &d)| CurvePoint::new((i + 1) as f64 / (n + 1) as f64, d)).collect();
        let c = CalibrationCurve::new(CurveMethod::NumericBinary, pts).unwrap();
        let mut run = 0.0f64;
        for (p, &d) in c.points.iter().zip(&raw) {
            run = run.max(d);
            prop_assert_eq!(p.delta, run);
            prop_assert_eq!(p.measured, d);
        }
    }

    #[test]
    fn inverse_is_monotone_and_left_continuous(
        raw in prop::collection::vec(0.0f64..1.0, 1..12),
        x in 0.0f64..1.2,
        y in 0.0f64..1.2,
    ) {
        let n = raw.len();
        let mut acc = 0.0;
        let pairs: Vec<(f64, f64)> = raw.iter().enumerate().map(|(i, d)| {
            acc += d;
            ((i + 1) as f64 / n as f64, acc / n as f64)
        }).collect();
        let c = CalibrationCurve::from_pairs(CurveMethod::NumericBinary, &pairs).unwrap();
        let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
        let a = generalized_inverse(&c, lo).unwrap();
        let b = generalized_inverse(&c, hi).unwrap();
        prop_assert!(a.eps <= b.eps + 1e-12);
        if !b.beyond_curve {
            // the interpolated curve reaches hi at the returned ε
            let at = c.interpolate(b.eps).unwrap_or(0.0);
            prop_assert!(at >= hi - 1e-9, "δ({}) = {at} < {hi}", b.eps);
        }
    }

    #[test]
    fn spec_files_round_trip(l in loss(3), k in 2usize..6) {
        let l = l.with_classes(k);
        prop_assert_eq!(loss_from_json(&loss_to_json(&l)).unwrap(), l);
    }
}

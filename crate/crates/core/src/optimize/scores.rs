use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::line::golden_section;
use super::{OptResult, OptimizerSettings};
use crate::losses::{ScoreSet, ScoreSetKind};
use crate::{Error, Result};

/// A linear constraint a·s = b or a·s ≥ b.
#[derive(Debug, Clone, PartialEq)]
pub enum Constraint {
    Eq { coeffs: Vec<f64>, rhs: f64 },
    Ge { coeffs: Vec<f64>, rhs: f64 },
}

impl Constraint {
    fn unit(k: usize, i: usize, v: f64) -> Vec<f64> {
        let mut a = vec![0.0; k];
        a[i] = v;
        a
    }

    /// s ∈ M(S, j): s_j ≥ s_k for every k ≠ j.
    pub fn argmax(k: usize, j: usize) -> Vec<Constraint> {
        (0..k)
            .filter(|&m| m != j)
            .map(|m| {
                let mut a = Self::unit(k, j, 1.0);
                a[m] = -1.0;
                Constraint::Ge { coeffs: a, rhs: 0.0 }
            })
            .collect()
    }

    /// s ∈ M(S, i) ∩ M(S, j).
    pub fn argmax_pair(k: usize, i: usize, j: usize) -> Vec<Constraint> {
        let mut c = Self::argmax(k, i);
        c.push(Self::tie(k, i, j));
        c
    }

    /// s_i = s_j
    pub fn tie(k: usize, i: usize, j: usize) -> Constraint {
        let mut a = Self::unit(k, i, 1.0);
        a[j] -= 1.0;
        Constraint::Eq { coeffs: a, rhs: 0.0 }
    }

    /// s_i = v
    pub fn fix(k: usize, i: usize, v: f64) -> Constraint {
        Constraint::Eq { coeffs: Self::unit(k, i, 1.0), rhs: v }
    }

    /// s_i − s_j ≥ margin
    pub fn gap(k: usize, i: usize, j: usize, margin: f64) -> Constraint {
        let mut a = Self::unit(k, i, 1.0);
        a[j] -= 1.0;
        Constraint::Ge { coeffs: a, rhs: margin }
    }

    /// s_i ≥ v
    pub fn at_least(k: usize, i: usize, v: f64) -> Constraint {
        Constraint::Ge { coeffs: Self::unit(k, i, 1.0), rhs: v }
    }

    fn coeffs(&self) -> &[f64] {
        match self {
            Constraint::Eq { coeffs, .. } | Constraint::Ge { coeffs, .. } => coeffs,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// The feasible polyhedron: orthonormalised equalities plus inequalities.
struct Polytope {
    k: usize,
    eq: Vec<(Vec<f64>, f64)>,
    ge: Vec<(Vec<f64>, f64)>,
    /// Number of leading entries of `ge` that are the artificial box.
    n_box: usize,
}

impl Polytope {
    fn build(set: &ScoreSet, constraints: &[Constraint], radius: f64) -> Result<Self> {
        let k = set.k;
        let mut eqs: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut ge: Vec<(Vec<f64>, f64)> = Vec::new();
        if !set.is_bounded() {
            for i in 0..k {
                ge.push((Constraint::unit(k, i, -1.0), -radius));
                if set.kind != ScoreSetKind::Nonnegative {
                    ge.push((Constraint::unit(k, i, 1.0), -radius));
                }
            }
        }
        let n_box = ge.len();
        match set.kind {
            ScoreSetKind::Full => {}
            ScoreSetKind::SumToZero => eqs.push((vec![1.0; k], 0.0)),
            ScoreSetKind::Simplex => {
                eqs.push((vec![1.0; k], 1.0));
                for i in 0..k {
                    ge.push((Constraint::unit(k, i, 1.0), 0.0));
                }
            }
            ScoreSetKind::BoxedSumToZero => {
                eqs.push((vec![1.0; k], 0.0));
                for i in 0..k {
                    ge.push((Constraint::unit(k, i, 1.0), set.lower_bound));
                }
            }
            ScoreSetKind::Nonnegative => {
                for i in 0..k {
                    ge.push((Constraint::unit(k, i, 1.0), 0.0));
                }
            }
        }
        for c in constraints {
            if c.coeffs().len() != k {
                return Err(Error::Domain(format!(
                    "constraint has {} coefficients, K = {k}",
                    c.coeffs().len()
                )));
            }
            match c {
                Constraint::Eq { coeffs, rhs } => eqs.push((coeffs.clone(), *rhs)),
                Constraint::Ge { coeffs, rhs } => ge.push((coeffs.clone(), *rhs)),
            }
        }
        let mut eq: Vec<(Vec<f64>, f64)> = Vec::new();
        for (mut a, mut b) in eqs {
            for (q, c) in &eq {
                let proj = dot(&a, q);
                for (x, y) in a.iter_mut().zip(q) {
                    *x -= proj * y;
                }
                b -= proj * c;
            }
            let n = norm(&a);
            if n < 1e-10 {
                if b.abs() > 1e-9 {
                    return Err(Error::Infeasible("inconsistent equality constraints".into()));
                }
                continue;
            }
            a.iter_mut().for_each(|x| *x /= n);
            eq.push((a, b / n));
        }
        Ok(Polytope { k, eq, ge, n_box })
    }

    fn project_eq(&self, s: &mut [f64]) {
        for (q, c) in &self.eq {
            let r = dot(q, s) - c;
            for (x, y) in s.iter_mut().zip(q) {
                *x -= r * y;
            }
        }
    }

    fn project_dir(&self, d: &mut [f64]) {
        for (q, _) in &self.eq {
            let r = dot(q, d);
            for (x, y) in d.iter_mut().zip(q) {
                *x -= r * y;
            }
        }
    }

    fn max_violation(&self, s: &[f64]) -> f64 {
        let mut v: f64 = 0.0;
        for (q, c) in &self.eq {
            v = v.max((dot(q, s) - c).abs());
        }
        for (a, b) in &self.ge {
            v = v.max(b - dot(a, s));
        }
        v
    }

    /// Alternating projections onto the equality subspace and the violated
    /// half-spaces.
    fn make_feasible(&self, start: &[f64]) -> Result<Vec<f64>> {
        let mut s = start.to_vec();
        for _ in 0..20_000 {
            self.project_eq(&mut s);
            let mut worst: f64 = 0.0;
            for (a, b) in &self.ge {
                let slack = dot(a, &s) - b;
                if slack < 0.0 {
                    worst = worst.max(-slack);
                    let n2 = dot(a, a);
                    for (x, y) in s.iter_mut().zip(a) {
                        *x += (-slack / n2) * y;
                    }
                }
            }
            if worst <= 1e-13 {
                self.project_eq(&mut s);
                if self.max_violation(&s) <= 1e-10 {
                    return Ok(s);
                }
            }
        }
        self.project_eq(&mut s);
        if self.max_violation(&s) <= 1e-9 {
            Ok(s)
        } else {
            Err(Error::Infeasible(format!(
                "no feasible point found (violation {:.3e})",
                self.max_violation(&s)
            )))
        }
    }

    /// Step interval [lo, hi] keeping s + t·d feasible.
    fn step_interval(&self, s: &[f64], d: &[f64]) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for (a, b) in &self.ge {
            let ad = dot(a, d);
            let slack = (dot(a, s) - b).max(0.0);
            if ad < -1e-14 {
                hi = hi.min(slack / -ad);
            } else if ad > 1e-14 {
                lo = lo.max(-slack / ad);
            }
        }
        (lo.min(0.0), hi.max(0.0))
    }

    fn on_box(&self, s: &[f64]) -> bool {
        self.ge[..self.n_box].iter().any(|(a, b)| dot(a, s) - b < 1e-6)
    }

    /// Whether the ray λ·s (λ ≥ 1) stays feasible for all non-box constraints.
    fn ray_feasible(&self, s: &[f64], lambda: f64) -> bool {
        let t: Vec<f64> = s.iter().map(|x| x * lambda).collect();
        self.eq.iter().all(|(q, c)| (dot(q, &t) - c).abs() <= 1e-9 * lambda.max(1.0))
            && self.ge[self.n_box..].iter().all(|(a, b)| dot(a, &t) - b >= -1e-9 * lambda.max(1.0))
    }
}

fn subsets(k: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << k)).map(|m| (0..k).filter(|i| m & (1 << i) != 0).collect()).collect()
}

/// Search directions: 1_A/|A| − 1_B/|B| for disjoint non-empty A, B and the
/// indicator directions 1_A, projected onto the equality subspace and
/// de-duplicated up to sign.
fn directions(poly: &Polytope) -> Vec<Vec<f64>> {
    let k = poly.k;
    let subs = subsets(k);
    let mut raw: Vec<Vec<f64>> = Vec::new();
    for a in &subs {
        let mut d = vec![0.0; k];
        a.iter().for_each(|&i| d[i] = 1.0);
        raw.push(d);
    }
    for (ia, a) in subs.iter().enumerate() {
        for b in subs.iter().skip(ia + 1) {
            if a.iter().any(|i| b.contains(i)) {
                continue;
            }
            let mut d = vec![0.0; k];
            a.iter().for_each(|&i| d[i] += 1.0 / a.len() as f64);
            b.iter().for_each(|&i| d[i] -= 1.0 / b.len() as f64);
            raw.push(d);
        }
    }
    // pairwise moves first: they do most of the work
    raw.sort_by_key(|d| d.iter().filter(|x| **x != 0.0).count());
    let mut out: Vec<Vec<f64>> = Vec::new();
    for mut d in raw {
        poly.project_dir(&mut d);
        let n = norm(&d);
        if n < 1e-9 {
            continue;
        }
        d.iter_mut().for_each(|x| *x /= n);
        if out.iter().all(|e| dot(e, &d).abs() < 1.0 - 1e-9) {
            out.push(d);
        }
    }
    out
}

struct Search<'a, F: Fn(&[f64]) -> f64> {
    f: &'a F,
    poly: &'a Polytope,
    evals: usize,
    buf: Vec<f64>,
}

impl<F: Fn(&[f64]) -> f64> Search<'_, F> {
    fn eval(&mut self, s: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(s);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }

    /// Exact line search along d; returns the improvement.
    fn step(&mut self, s: &mut [f64], fs: &mut f64, d: &[f64]) -> f64 {
        let (lo, hi) = self.poly.step_interval(s, d);
        if hi - lo < 1e-13 {
            return 0.0;
        }
        let lo = lo.max(-1e3);
        let hi = hi.min(1e3);
        let mut buf = std::mem::take(&mut self.buf);
        let mut evals = 0;
        let (t, v) = golden_section(
            |t| {
                evals += 1;
                buf.clear();
                buf.extend(s.iter().zip(d).map(|(x, y)| x + t * y));
                let v = (self.f)(&buf);
                if v.is_nan() {
                    f64::INFINITY
                } else {
                    v
                }
            },
            lo,
            hi,
            1e-11,
        );
        self.buf = buf;
        self.evals += evals;
        if v < *fs {
            for (x, y) in s.iter_mut().zip(d) {
                *x += t * y;
            }
            self.poly.project_eq(s);
            let nv = self.eval(s);
            if nv <= *fs {
                let gain = *fs - nv;
                *fs = nv;
                return gain;
            }
            // projection drift made it worse: undo
            for (x, y) in s.iter_mut().zip(d) {
                *x -= t * y;
            }
            self.poly.project_eq(s);
        }
        0.0
    }
}

struct Run {
    s: Vec<f64>,
    value: f64,
    residual: f64,
    converged: bool,
}

fn descend<F: Fn(&[f64]) -> f64>(
    search: &mut Search<F>,
    dirs: &[Vec<f64>],
    start: Vec<f64>,
    rng: &mut ChaCha8Rng,
    settings: &OptimizerSettings,
) -> Run {
    let mut s = start;
    let mut fs = search.eval(&s);
    let k = s.len();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut stalls = 0;
    let mut sweeps = 0;
    while sweeps < settings.max_iters {
        sweeps += 1;
        let before = fs;
        for d in dirs {
            search.step(&mut s, &mut fs, d);
        }
        if fs < -1e12 {
            residual = 0.0;
            break;
        }
        let gain = before - fs;
        let stop = 1e-14 * fs.abs().max(1.0);
        if gain.is_nan() || gain <= stop {
            // try a few random directions before declaring convergence
            let mut extra = 0.0;
            for _ in 0..(2 * k) {
                let mut d: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
                search.poly.project_dir(&mut d);
                let n = norm(&d);
                if n < 1e-9 {
                    continue;
                }
                d.iter_mut().for_each(|x| *x /= n);
                extra += search.step(&mut s, &mut fs, &d);
            }
            stalls += 1;
            if extra <= stop || stalls > 20 {
                residual = gain.max(0.0) + extra;
                converged = extra <= stop;
                break;
            }
        }
        residual = gain;
    }
    if !converged && sweeps >= settings.max_iters {
        converged = residual <= settings.tol;
    }
    Run { s, value: fs, residual: if residual.is_finite() { residual } else { 0.0 }, converged }
}

/// Minimises `objective` over the score set intersected with `constraints`.
///
/// Multi-start projected direction descent with exact golden-section line
/// searches; starts are the set's center plus `restarts − 1` random points
/// projected to feasibility.
pub fn minimize_over_scores<F: Fn(&[f64]) -> f64>(
    objective: F,
    set: &ScoreSet,
    constraints: &[Constraint],
    settings: &OptimizerSettings,
) -> Result<OptResult> {
    minimize_over_scores_from(objective, set, constraints, settings, &[])
}

/// As [`minimize_over_scores`], with caller-supplied extra starting points.
pub fn minimize_over_scores_from<F: Fn(&[f64]) -> f64>(
    objective: F,
    set: &ScoreSet,
    constraints: &[Constraint],
    settings: &OptimizerSettings,
    starts: &[Vec<f64>],
) -> Result<OptResult> {
    settings.validate()?;
    set.validate()?;
    let poly = Polytope::build(set, constraints, settings.box_radius)?;
    let dirs = directions(&poly);
    let k = set.k;
    let mut search = Search { f: &objective, poly: &poly, evals: 0, buf: Vec::with_capacity(k) };

    let mut candidates: Vec<Vec<f64>> = starts.to_vec();
    candidates.push(set.center());
    let spread = settings.box_radius.min(4.0);
    for r in 1..settings.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(settings.stream(r as u64));
        let base = set.center();
        candidates.push(base.iter().map(|c| c + spread * (rng.random::<f64>() * 2.0 - 1.0)).collect());
    }

    let mut best: Option<Run> = None;
    let mut last_err = None;
    for (i, c) in candidates.iter().enumerate() {
        if c.len() != k {
            return Err(Error::Domain(format!("start point has length {}, K = {k}", c.len())));
        }
        let start = match poly.make_feasible(c) {
            Ok(s) => s,
            Err(e) => {
                last_err = Some(e);
                continue;
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(settings.stream(1_000_003 + i as u64));
        let run = descend(&mut search, &dirs, start, &mut rng, settings);
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
        if best.as_ref().is_some_and(|b| b.value < -1e12) {
            break;
        }
    }
    let best = match best {
        Some(b) => b,
        None => return Err(last_err.unwrap_or_else(|| Error::Infeasible("no start point".into()))),
    };

    let boundary = poly.n_box > 0 && poly.on_box(&best.s);
    let mut unbounded = best.value < -1e12;
    if boundary && !unbounded {
        // probe the ray through the boundary minimiser
        let mut lambda = 10.0;
        while lambda <= 1e12 {
            if !poly.ray_feasible(&best.s, lambda) {
                break;
            }
            let t: Vec<f64> = best.s.iter().map(|x| x * lambda).collect();
            if objective(&t) < -1e12 {
                unbounded = true;
                break;
            }
            lambda *= 10.0;
        }
    }
    Ok(OptResult {
        minimizer: best.s,
        value: best.value,
        residual: best.residual,
        converged: best.converged,
        unbounded,
        boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_on_sum_to_zero() {
        let r = minimize_over_scores(
            |s: &[f64]| s.iter().map(|x| x * x).sum(),
            &ScoreSet::sum_to_zero(3),
            &[],
            &OptimizerSettings::default(),
        )
        .unwrap();
        assert!(r.value < 1e-14);
        assert!(r.minimizer.iter().all(|x| x.abs() < 1e-7));
    }

    #[test]
    fn shifted_quadratic_with_constraints() {
        // min ‖s − c‖² over s_0 ≥ s_1, s_0 ≥ s_2, Σ s = 0 with c outside the cone
        let c = [-1.0, 2.0, -1.0];
        let f = |s: &[f64]| s.iter().zip(&c).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
        let r = minimize_over_scores(f, &ScoreSet::sum_to_zero(3), &Constraint::argmax(3, 0), &OptimizerSettings::default())
            .unwrap();
        // projection onto the face s_0 = s_1: (0.5, 0.5, −1)
        assert!((r.minimizer[0] - 0.5).abs() < 1e-6, "{:?}", r.minimizer);
        assert!((r.minimizer[1] - 0.5).abs() < 1e-6);
        assert!((r.value - 4.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_system() {
        let cons = vec![Constraint::fix(2, 0, 1.0), Constraint::fix(2, 1, 1.0)];
        let r = minimize_over_scores(|_: &[f64]| 0.0, &ScoreSet::sum_to_zero(2), &cons, &OptimizerSettings::default());
        assert!(matches!(r, Err(Error::Infeasible(_))));
        let cons = vec![Constraint::gap(2, 0, 1, 1.0), Constraint::gap(2, 1, 0, 1.0)];
        let r = minimize_over_scores(|_: &[f64]| 0.0, &ScoreSet::full(2), &cons, &OptimizerSettings::default());
        assert!(matches!(r, Err(Error::Infeasible(_))));
    }

    #[test]
    fn linear_objective_is_unbounded() {
        let r = minimize_over_scores(|s: &[f64]| s[0] - s[1], &ScoreSet::sum_to_zero(2), &[], &OptimizerSettings::default())
            .unwrap();
        assert!(r.unbounded);
        assert!(r.boundary);
        let r = minimize_over_scores(|s: &[f64]| s[0].exp() + s[1].exp(), &ScoreSet::full(2), &[], &OptimizerSettings::default())
            .unwrap();
        assert!(!r.unbounded);
        assert!(r.boundary);
    }

    #[test]
    fn simplex_entropy() {
        let p = [0.6, 0.4];
        let f = |s: &[f64]| -(p[0] * s[0].ln() + p[1] * s[1].ln());
        let r = minimize_over_scores(f, &ScoreSet::simplex(2), &[], &OptimizerSettings::default()).unwrap();
        assert!((r.minimizer[0] - 0.6).abs() < 1e-6);
        assert!(ScoreSet::simplex(2).contains(&r.minimizer));
    }
}

use serde::Serialize;

use crate::losses::{index_sets, Distribution, Family, LossSpec, PhiKind, Surrogate, GAP_TOL};
use crate::optimize::{minimize_over_scores, simplex_grid, Constraint, OptimizerSettings};
use crate::{Error, Result};

/// Minimal risk over each argmax region M(S, j) at one distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassProfile {
    pub p: Vec<f64>,
    /// m[j] = inf over M(S, j) of R(·, p).
    pub m: Vec<f64>,
    pub minimizers: Vec<Vec<f64>>,
    pub residual: f64,
    pub converged: bool,
}

impl ClassProfile {
    /// inf over S, which is the smallest region minimum since the M(S, j) cover S.
    pub fn global_min(&self) -> f64 {
        self.m.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Unclamped δ_max(ε, p) together with the class attaining the
    /// constrained infimum; `None` when no class is ε-suboptimal.
    pub fn raw_delta(&self, eps: f64) -> Result<Option<(f64, usize)>> {
        let sets = index_sets(eps, &Distribution::new(self.p.clone())?)?;
        let best = sets
            .suboptimal
            .iter()
            .map(|&j| (self.m[j], j))
            .fold(None, |acc: Option<(f64, usize)>, c| match acc {
                Some(a) if a.0 <= c.0 => Some(a),
                _ => Some(c),
            });
        Ok(best.map(|(v, j)| (v - self.global_min(), j)))
    }

    /// δ_max(ε, p) clamped at zero, +∞ when no class is ε-suboptimal.
    pub fn delta(&self, eps: f64) -> Result<f64> {
        Ok(match self.raw_delta(eps)? {
            Some((v, _)) => v.max(0.0),
            None => f64::INFINITY,
        })
    }
}

/// Computes the per-class constrained minima at `p`.
pub fn class_profile(loss: &LossSpec, p: &Distribution, settings: &OptimizerSettings) -> Result<ClassProfile> {
    loss.validate()?;
    let k = loss.k();
    if p.k() != k {
        return Err(Error::Domain(format!("distribution has {} classes, loss has {k}", p.k())));
    }
    let ps = p.as_slice();
    let mut prof = ClassProfile {
        p: ps.to_vec(),
        m: Vec::with_capacity(k),
        minimizers: Vec::with_capacity(k),
        residual: 0.0,
        converged: true,
    };
    for j in 0..k {
        let r = minimize_over_scores(|s: &[f64]| loss.risk(s, ps), &loss.score_set, &Constraint::argmax(k, j), settings)?;
        if r.unbounded {
            return Err(Error::Unbounded(format!("risk of {loss} is unbounded below at p = {ps:?}")));
        }
        prof.m.push(r.value);
        prof.minimizers.push(r.minimizer);
        prof.residual = prof.residual.max(r.residual);
        prof.converged &= r.converged || r.boundary;
    }
    Ok(prof)
}

/// A δ_max value with the distribution and scores that attain it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaMax {
    pub eps: f64,
    /// Clamped at zero; +∞ when no distribution has an ε-suboptimal class.
    pub value: f64,
    /// Value before clamping.
    pub raw: f64,
    pub witness_p: Option<Vec<f64>>,
    /// Minimiser of the risk over the ε-suboptimal region at `witness_p`.
    pub witness_s: Option<Vec<f64>>,
    pub residual: f64,
    pub converged: bool,
}

impl DeltaMax {
    fn empty(eps: f64) -> Self {
        DeltaMax {
            eps,
            value: f64::INFINITY,
            raw: f64::INFINITY,
            witness_p: None,
            witness_s: None,
            residual: 0.0,
            converged: true,
        }
    }

    fn offer(&mut self, prof: &ClassProfile) -> Result<()> {
        if let Some((raw, j)) = prof.raw_delta(self.eps)? {
            if raw < self.raw {
                self.raw = raw;
                self.value = raw.max(0.0);
                self.witness_p = Some(prof.p.clone());
                self.witness_s = Some(prof.minimizers[j].clone());
                self.residual = prof.residual;
                self.converged = prof.converged;
            }
        }
        Ok(())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::Domain(format!("eps = {eps} outside (0, 1]")));
    }
    Ok(())
}

/// δ_max(ε, p) = inf over ε-suboptimal scores of R(·, p) minus inf over S.
pub fn delta_max_pointwise(loss: &LossSpec, eps: f64, p: &Distribution, settings: &OptimizerSettings) -> Result<DeltaMax> {
    check_eps(eps)?;
    let mut out = DeltaMax::empty(eps);
    if index_sets(eps, p)?.suboptimal.is_empty() {
        return Ok(out);
    }
    out.offer(&class_profile(loss, p, settings)?)?;
    Ok(out)
}

/// Distributions tried in addition to the simplex grid for a given ε: the
/// two-class distributions ((1+ε)/2, (1−ε)/2) on every ordered pair, and for
/// the three-class kink LLW loss the distributions where its ties are optimal.
pub fn injected_candidates(loss: &LossSpec, eps: f64) -> Vec<Distribution> {
    let k = loss.k();
    let mut out = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i != j {
                if let Ok(d) = Distribution::embedded_pair(k, i, j, eps) {
                    out.push(d);
                }
            }
        }
    }
    if k == 3 && loss.family == Family::LLW && loss.phi.kind == PhiKind::Kink {
        for p in [[8.0 / 20.0, 7.0 / 20.0, 5.0 / 20.0], [6.0 / 15.0, 7.0 / 15.0, 2.0 / 15.0]] {
            let v = p.to_vec();
            let fix = |mut v: Vec<f64>| {
                let s: f64 = v[..2].iter().sum();
                v[2] = 1.0 - s;
                v
            };
            if let Ok(d) = Distribution::new(fix(v)) {
                out.push(d);
            }
        }
    }
    out
}

fn check_grid_k(loss: &LossSpec, resolution: usize) -> Result<()> {
    if loss.k() > 4 {
        return Err(Error::Unsupported(format!("exhaustive simplex grid needs K ≤ 4, got {}", loss.k())));
    }
    if resolution == 0 {
        return Err(Error::Domain("simplex resolution must be positive".into()));
    }
    Ok(())
}

/// δ_max(ε): minimum of [`delta_max_pointwise`] over `simplex_grid(K,
/// resolution)` and the [`injected_candidates`]. An upper bound on the true
/// infimum over the simplex.
pub fn delta_max_global(loss: &LossSpec, eps: f64, resolution: usize, settings: &OptimizerSettings) -> Result<DeltaMax> {
    Ok(delta_max_global_curve(loss, &[eps], resolution, settings)?.remove(0))
}

/// [`delta_max_global`] at several ε, sharing the per-distribution minima.
pub fn delta_max_global_curve(
    loss: &LossSpec,
    eps_grid: &[f64],
    resolution: usize,
    settings: &OptimizerSettings,
) -> Result<Vec<DeltaMax>> {
    for &e in eps_grid {
        check_eps(e)?;
    }
    check_grid_k(loss, resolution)?;
    loss.validate()?;
    let mut out: Vec<DeltaMax> = eps_grid.iter().map(|&e| DeltaMax::empty(e)).collect();
    let e_min = eps_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    for p in simplex_grid(loss.k(), resolution) {
        // skip distributions where no ε on the grid has a suboptimal class
        if p.max() - p.as_slice().iter().cloned().fold(f64::INFINITY, f64::min) < e_min - GAP_TOL {
            continue;
        }
        let prof = class_profile(loss, &p, settings)?;
        for d in out.iter_mut() {
            d.offer(&prof)?;
        }
    }
    for d in out.iter_mut() {
        for p in injected_candidates(loss, d.eps) {
            let prof = class_profile(loss, &p, settings)?;
            d.offer(&prof)?;
        }
    }
    Ok(out)
}

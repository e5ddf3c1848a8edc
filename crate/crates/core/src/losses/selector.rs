use crate::{Error, Result};

/// Absolute tolerance for ties in the maximum selector and argmax-set membership.
pub const TIE_TOL: f64 = 1e-9;
/// Slack on probability gaps so that grid points like 0.30 − 0.25 count as 0.05.
pub const GAP_TOL: f64 = 1e-12;
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A class distribution p on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::Domain("distribution needs at least two classes".into()));
        }
        if p.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain(format!("distribution has a negative or non-finite entry: {p:?}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::Domain(format!("distribution sums to {sum}, not 1")));
        }
        Ok(Distribution(p))
    }

    pub fn uniform(k: usize) -> Self {
        Distribution(vec![1.0 / k as f64; k])
    }

    /// p^ε = ((1+ε)/2, (1−ε)/2)
    pub fn p_eps(eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eps) {
            return Err(Error::Domain(format!("eps = {eps} outside [0, 1]")));
        }
        Ok(Distribution(vec![(1.0 + eps) / 2.0, (1.0 - eps) / 2.0]))
    }

    /// p^ε placed on classes `i` and `j` of a K-class problem.
    pub fn embedded_pair(k: usize, i: usize, j: usize, eps: f64) -> Result<Self> {
        if i == j || i >= k || j >= k {
            return Err(Error::Domain(format!("bad class pair ({i}, {j}) for K = {k}")));
        }
        let mut p = vec![0.0; k];
        p[i] = (1.0 + eps) / 2.0;
        p[j] = (1.0 - eps) / 2.0;
        Distribution::new(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest index attaining max p.
    pub fn argmax(&self) -> usize {
        let m = self.max();
        self.0.iter().position(|v| *v == m).unwrap()
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Distribution(permute(&self.0, perm))
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for Distribution {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// (Ps)_k = s_{perm[k]}
pub fn permute(s: &[f64], perm: &[usize]) -> Vec<f64> {
    perm.iter().map(|&i| s[i]).collect()
}

/// All indices attaining the maximum within [`TIE_TOL`].
pub fn max_selector(s: &[f64]) -> Vec<usize> {
    let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (0..s.len()).filter(|&k| s[k] >= m - TIE_TOL).collect()
}

/// The selected index under worst-case tie breaking: among the maximisers of
/// `s`, the one with the smallest p (smallest index on equal p).
pub fn worst_index(s: &[f64], p: &[f64]) -> usize {
    let mut best = usize::MAX;
    for k in max_selector(s) {
        if best == usize::MAX || p[k] < p[best] {
            best = k;
        }
    }
    best
}

/// Whether s lies in M(S, j), i.e. s_j is maximal within [`TIE_TOL`].
pub fn in_argmax_set(s: &[f64], j: usize) -> bool {
    let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    s[j] >= m - TIE_TOL
}

/// The suboptimality index sets for one (ε, p).
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSets {
    pub eps: f64,
    pub p: Vec<f64>,
    /// Classes whose probability is at least ε below the maximum.
    pub suboptimal: Vec<usize>,
    /// argmax of p over `suboptimal`; empty when no class is ε-suboptimal.
    pub j_eps: Vec<usize>,
}

impl IndexSets {
    /// Tie-broken representative of `j_eps` (smallest index).
    pub fn j(&self) -> Option<usize> {
        self.j_eps.first().copied()
    }

    pub fn in_m(&self, s: &[f64], j: usize) -> bool {
        in_argmax_set(s, j)
    }

    /// s is ε-suboptimal when its worst tie-broken selection is.
    pub fn in_t(&self, s: &[f64]) -> bool {
        let w = worst_index(s, &self.p);
        gap(&self.p, w) >= self.eps - GAP_TOL
    }
}

fn gap(p: &[f64], j: usize) -> f64 {
    let m = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m - p[j]
}

pub fn index_sets(eps: f64, p: &Distribution) -> Result<IndexSets> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::Domain(format!("eps = {eps} outside [0, 1]")));
    }
    let p = p.as_slice();
    let suboptimal: Vec<usize> = (0..p.len()).filter(|&j| gap(p, j) >= eps - GAP_TOL).collect();
    let j_eps = match suboptimal.iter().map(|&j| p[j]).fold(None, |m: Option<f64>, v| {
        Some(m.map_or(v, |m| m.max(v)))
    }) {
        Some(best) => suboptimal.iter().copied().filter(|&j| p[j] >= best - GAP_TOL).collect(),
        None => Vec::new(),
    };
    Ok(IndexSets { eps, p: p.to_vec(), suboptimal, j_eps })
}

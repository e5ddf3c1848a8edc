use crate::losses::Distribution;

fn compositions(k: usize, m: usize, min_part: usize) -> Vec<Vec<usize>> {
    fn rec(k: usize, left: usize, min_part: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k - 1 {
            if left >= min_part {
                cur.push(left);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        let remaining_slots = k - 1 - cur.len();
        for v in min_part..=left {
            if left - v < remaining_slots * min_part {
                break;
            }
            cur.push(v);
            rec(k, left - v, min_part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k == 0 || m < k * min_part {
        return out;
    }
    rec(k, m, min_part, &mut Vec::with_capacity(k), &mut out);
    out
}

fn to_dist(c: &[usize], m: usize) -> Distribution {
    let mut p: Vec<f64> = c.iter().map(|&v| v as f64 / m as f64).collect();
    // absorb rounding so the entries sum to one exactly enough
    let s: f64 = p.iter().sum();
    let last = p.len() - 1;
    p[last] += 1.0 - s;
    if p[last] < 0.0 {
        p[last] = 0.0;
    }
    Distribution::new(p).expect("grid point is a distribution")
}

/// All p = k/m with k a composition of m into K nonnegative parts,
/// in lexicographic order of k.
pub fn simplex_grid(k: usize, m: usize) -> Vec<Distribution> {
    if m == 0 {
        return Vec::new();
    }
    compositions(k, m, 0).iter().map(|c| to_dist(c, m)).collect()
}

/// Grid points with every coordinate strictly positive.
pub fn simplex_grid_interior(k: usize, m: usize) -> Vec<Distribution> {
    if m == 0 {
        return Vec::new();
    }
    compositions(k, m, 1).iter().map(|c| to_dist(c, m)).collect()
}

use super::{OptResult, OptimizerSettings};

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn clean(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Golden-section search on [a, b]; the endpoints are also evaluated so
/// minima sitting on the boundary of the interval are returned exactly.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = if a <= b { (a, b) } else { (b, a) };
    let fa0 = clean(f(a));
    let fb0 = clean(f(b));
    let (a0, b0) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = clean(f(c));
    let mut fd = clean(f(d));
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = clean(f(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = clean(f(d));
        }
    }
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    if fa0 <= best.1 {
        best = (a0, fa0);
    }
    if fb0 < best.1 {
        best = (b0, fb0);
    }
    best
}

/// One-dimensional minimisation over ℝ clipped to [−box_radius, box_radius].
///
/// Brackets by doubling steps away from 0, then refines with golden
/// section. A still-decreasing objective at the box edge returns the edge
/// with `converged = false`.
pub fn minimize_1d<F: Fn(f64) -> f64>(objective: F, settings: &OptimizerSettings) -> OptResult {
    let f = |t: f64| clean(objective(t));
    let r = settings.box_radius;
    let tol = (settings.tol * 1e-2).max(1e-13);
    let h = 1f64.min(r);
    let f0 = f(0.0);
    let fp = f(h);
    let fm = f(-h);

    let (lo, hi) = if fp >= f0 && fm >= f0 {
        (-h, h)
    } else {
        let dir = if fp < fm { 1.0 } else { -1.0 };
        let mut prev = 0.0;
        let mut cur = h;
        let mut fcur = if dir > 0.0 { fp } else { fm };
        loop {
            if cur >= r {
                let t = dir * r;
                return OptResult {
                    minimizer: vec![t],
                    value: fcur,
                    residual: (f(dir * (r - tol.max(1e-9))) - fcur).max(0.0),
                    converged: false,
                    unbounded: fcur < -1e12,
                    boundary: true,
                };
            }
            let next = (2.0 * cur).min(r);
            let fnext = f(dir * next);
            if fnext >= fcur {
                let (a, b) = (dir * prev, dir * next);
                break if a < b { (a, b) } else { (b, a) };
            }
            prev = cur;
            cur = next;
            fcur = fnext;
        }
    };
    let (t, v) = golden_section(f, lo, hi, tol);
    let w = tol.max(1e-10);
    let residual = (f(t - w).min(f(t + w)) - v).max(0.0);
    OptResult {
        minimizer: vec![t],
        value: v,
        residual: if residual.is_finite() { residual } else { 0.0 },
        converged: true,
        unbounded: false,
        boundary: false,
    }
}

/// Minimisation on a bounded interval that tolerates non-unimodal
/// objectives: dense scan followed by golden refinement around the best
/// scan point.
pub fn minimize_scan<F: Fn(f64) -> f64>(objective: F, a: f64, b: f64, points: usize, tol: f64) -> (f64, f64) {
    let f = |t: f64| clean(objective(t));
    let n = points.max(3);
    let step = (b - a) / (n - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..n {
        let t = a + step * i as f64;
        let v = f(t);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let lo = a + step * best_i.saturating_sub(1) as f64;
    let hi = (a + step * (best_i + 1) as f64).min(b);
    let (t, v) = golden_section(f, lo, hi, tol);
    if v <= best_v {
        (t, v)
    } else {
        (a + step * best_i as f64, best_v)
    }
}

use crate::error::{ensure, Result};

pub const DEFAULT_DUDLEY_SCALES: usize = 20;

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check_points(points: &[Vec<f64>]) -> Result<()> {
    ensure(!points.is_empty(), || "empty point set".into())?;
    let dim = points[0].len();
    ensure(points.iter().all(|p| p.len() == dim), || "points differ in dimension".into())?;
    ensure(points.iter().flatten().all(|v| v.is_finite()), || "non-finite coordinate".into())
}

/// Farthest-point traversal from the first point. Returns the distance at
/// which each subsequent center was inserted; the sequence is
/// nonincreasing and independent of any covering radius, so a cover of
/// radius `r` uses `1 + #{d > r}` centers.
fn insertion_distances(points: &[Vec<f64>]) -> Vec<f64> {
    let mut min_dist: Vec<f64> = points.iter().map(|p| sup_dist(p, &points[0])).collect();
    let mut inserted = Vec::new();
    loop {
        let (far, &dist) = min_dist.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
        if dist <= 0.0 {
            break;
        }
        inserted.push(dist);
        let center = &points[far];
        for (m, p) in min_dist.iter_mut().zip(points) {
            *m = m.min(sup_dist(p, center));
        }
    }
    inserted
}

/// Greedy farthest-point cover size in the sup metric: an upper bound on
/// `N(T, d_inf, radius)`, exact when `radius >= diam` or `radius` is below
/// the minimum pairwise distance.
pub fn covering_number(points: &[Vec<f64>], radius: f64) -> Result<usize> {
    check_points(points)?;
    ensure(radius > 0.0, || format!("radius must be > 0, got {radius}"))?;
    Ok(1 + insertion_distances(points).iter().filter(|&&d| d > radius).count())
}

fn diameter(points: &[Vec<f64>]) -> f64 {
    let mut diam = 0.0_f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            diam = diam.max(sup_dist(a, b));
        }
    }
    diam
}

/// Entropy-integral upper bound on `gamma_2(T, d_inf)`.
///
/// Upper Riemann sum of `sqrt(log N(eps))` on the radii `diam / 2^k`,
/// `k = 0..scales`, plus the final piece `[0, diam / 2^scales]` bounded with
/// the number of distinct points.
pub fn dudley_gamma2(points: &[Vec<f64>], scales: usize) -> Result<f64> {
    check_points(points)?;
    let diam = diameter(points);
    if diam == 0.0 {
        return Ok(0.0);
    }
    let inserted = insertion_distances(points);
    let n_at = |r: f64| 1 + inserted.iter().filter(|&&d| d > r).count();
    let mut total = 0.0;
    let mut eps = diam;
    for _ in 0..scales {
        let next = 0.5 * eps;
        total += (eps - next) * (n_at(next) as f64).ln().sqrt();
        eps = next;
    }
    total += eps * (n_at(0.0) as f64).ln().sqrt();
    Ok(total)
}

/// Maurey-type bound on `gamma_2` of a coordinate projection of the
/// l1-ball of radius `r`:
/// `c0 r max_i ||X_i||_inf log d log(sqrt n / log d)`, with the last
/// logarithm floored at 1.
pub fn maurey_l1_gamma2(r: f64, max_x_inf: f64, n: f64, d: f64, c0: f64) -> Result<f64> {
    ensure(r >= 0.0 && max_x_inf >= 0.0, || "r and max |X|_inf must be >= 0".into())?;
    ensure(n >= 1.0, || format!("n must be >= 1, got {n}"))?;
    ensure(d >= 2.0, || format!("d must be >= 2, got {d}"))?;
    let log_d = d.ln();
    let last = (n.sqrt() / log_d).ln().max(1.0);
    Ok(c0 * r * max_x_inf * log_d * last)
}

/// Bound on `E ||P - P_n||` over the L_q loss class localized at `mu`.
pub fn lq_localized_bound(mu: f64, un: f64, m: f64, n: f64, q: f64, c0: f64) -> Result<f64> {
    ensure(q >= 2.0, || format!("q must be >= 2, got {q}"))?;
    ensure(n >= 2.0, || format!("n must be >= 2, got {n}"))?;
    ensure([mu, un, m, c0].iter().all(|v| v.is_finite() && *v >= 0.0), || {
        "mu, U_n, M and c0 must be finite and >= 0".into()
    })?;
    let base = (mu * un / n).sqrt();
    let ratio = un / n;
    if q == 2.0 {
        return Ok(c0 * base.max(ratio));
    }
    let mlog = m * n.ln();
    let factor = mlog.powf((q - 2.0) / q);
    Ok(c0 * (base * factor.sqrt()).max(ratio * factor).max(mlog / n))
}

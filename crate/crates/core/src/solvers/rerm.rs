use ndarray::{Array1, Array2};

use crate::error::{ensure, Error, Result};
use crate::model::{l1_norm, Sample};

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 80;
const RADIUS_CAP: f64 = 1.152_921_504_606_847e18; // 2^60

/// A regularized estimator together with its optimality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct RermSolution {
    pub beta: Vec<f64>,
    /// `R_n(beta) + penalty(||beta||_1)`.
    pub objective: f64,
    /// l1-radius of the constraint set the returned iterate was computed on.
    pub inner_radius: f64,
    /// Upper bound on `objective - min`.
    pub optimality_gap: f64,
}

/// Euclidean projection onto `{ ||beta||_1 <= r }` by sorting magnitudes.
pub fn project_l1_ball(v: &[f64], r: f64) -> Result<Vec<f64>> {
    ensure(r >= 0.0 && !r.is_nan(), || format!("l1 radius must be >= 0, got {r}"))?;
    ensure(v.iter().all(|x| x.is_finite()), || "cannot project a non-finite vector".into())?;
    if l1_norm(v) <= r {
        return Ok(v.to_vec());
    }
    if r == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &m) in mags.iter().enumerate() {
        cum += m;
        let t = (cum - r) / (k + 1) as f64;
        if m > t {
            theta = t;
        } else {
            break;
        }
    }
    Ok(v.iter().map(|x| x.signum() * (x.abs() - theta).max(0.0)).collect())
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

/// `R_n^{(q)}(beta) = (1/n) sum |Y_i - <X_i, beta>|^q` with its gradient.
/// The quadratic case works from the normal equations.
enum Risk<'a> {
    Quadratic { gram: Array2<f64>, xty: Array1<f64>, yy: f64 },
    Power { x: &'a Array2<f64>, y: &'a Array1<f64>, q: f64 },
}

impl<'a> Risk<'a> {
    fn new(sample: &'a Sample, q: f64) -> Self {
        let (x, y) = (sample.design(), sample.response());
        if q == 2.0 {
            let n = sample.n() as f64;
            Risk::Quadratic { gram: x.t().dot(x) / n, xty: x.t().dot(y) / n, yy: y.dot(y) / n }
        } else {
            Risk::Power { x, y, q }
        }
    }

    fn value(&self, beta: &Array1<f64>) -> f64 {
        match self {
            Risk::Quadratic { gram, xty, yy } => beta.dot(&gram.dot(beta)) - 2.0 * xty.dot(beta) + yy,
            Risk::Power { x, y, q } => {
                let resid = *y - &x.dot(beta);
                resid.iter().map(|r| r.abs().powf(*q)).sum::<f64>() / y.len() as f64
            }
        }
    }

    fn gradient(&self, beta: &Array1<f64>) -> Array1<f64> {
        match self {
            Risk::Quadratic { gram, xty, .. } => 2.0 * (gram.dot(beta) - xty),
            Risk::Power { x, y, q } => {
                let n = y.len() as f64;
                let resid = *y - &x.dot(beta);
                let w = resid.mapv(|r| -q * r.abs().powf(q - 1.0) * r.signum() / n);
                x.t().dot(&w)
            }
        }
    }

    /// Curvature scale: `2 lambda_max(X'X/n)` for squares, and for `q > 2`
    /// the Hessian bound at `beta = 0`, `q(q-1) mean|Y|^(q-2) lambda_max`.
    fn curvature(&self) -> f64 {
        match self {
            Risk::Quadratic { gram, .. } => 2.0 * top_eigenvalue(|v| gram.dot(v), gram.ncols()),
            Risk::Power { x, y, q } => {
                let n = y.len() as f64;
                let lam = top_eigenvalue(|v| x.t().dot(&x.dot(v)) / n, x.ncols());
                let scale = y.iter().map(|v| v.abs().powf(q - 2.0)).sum::<f64>() / n;
                q * (q - 1.0) * scale * lam
            }
        }
    }
}

fn top_eigenvalue(apply: impl Fn(&Array1<f64>) -> Array1<f64>, d: usize) -> f64 {
    let mut v = Array1::from_shape_fn(d, |i| 1.0 + 1e-3 * i as f64);
    v /= v.dot(&v).sqrt();
    let mut lam = 0.0;
    for _ in 0..500 {
        let w = apply(&v);
        let norm = w.dot(&w).sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - lam).abs() <= 1e-10 * next.abs() {
            return norm.max(next);
        }
        lam = next;
    }
    lam
}

/// `sup_{||b||_1 <= r} <g, beta - b> = <g, beta> + r ||g||_inf`, an upper
/// bound on `R_n(beta) - V(r)`.
fn frank_wolfe_gap(grad: &Array1<f64>, beta: &Array1<f64>, r: f64) -> f64 {
    let sup = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
    (grad.dot(beta) + r * sup).max(0.0)
}

struct Probe {
    radius: f64,
    beta: Array1<f64>,
    risk: f64,
    fw_gap: f64,
}

struct RadiusSearch<'a> {
    risk: Risk<'a>,
    lambda: f64,
    q: f64,
    inner_tol: f64,
    max_iter: usize,
    step: f64,
    base_step: f64,
    adaptive_step: bool,
    probes: Vec<Probe>,
    lower_bound: f64,
}

impl<'a> RadiusSearch<'a> {
    fn new(sample: &'a Sample, q: f64, lambda: f64, inner_tol: f64, max_iter: usize) -> Self {
        let risk = Risk::new(sample, q);
        let curvature = risk.curvature();
        let step = if curvature > 0.0 { 1.0 / curvature } else { 1.0 };
        Self {
            risk,
            lambda,
            q,
            inner_tol,
            max_iter,
            step,
            base_step: step,
            adaptive_step: q != 2.0,
            probes: Vec::new(),
            lower_bound: f64::NEG_INFINITY,
        }
    }

    /// Accelerated projected gradient on `{ ||beta||_1 <= r }` with
    /// function-value restarts, warm-started from the probe with the
    /// closest radius. Steps backtrack by halving until the quadratic upper
    /// model holds at the extrapolated point.
    fn probe(&mut self, radius: f64, inner_tol: f64) -> Result<usize> {
        let start = self
            .probes
            .iter()
            .min_by(|a, b| (a.radius - radius).abs().total_cmp(&(b.radius - radius).abs()))
            .map(|p| p.beta.to_vec())
            .unwrap_or_else(|| vec![0.0; self.risk_dim()]);
        let mut beta = Array1::from(project_l1_ball(&start, radius)?);
        let mut f = self.risk.value(&beta);
        let mut g = self.risk.gradient(&beta);
        let mut gap = frank_wolfe_gap(&g, &beta, radius);
        let (mut y, mut fy, mut gy) = (beta.clone(), f, g.clone());
        let mut momentum = 1.0_f64;
        let mut step = self.step;
        for _ in 0..self.max_iter {
            if gap <= inner_tol {
                break;
            }
            step = if self.adaptive_step { 1.5 * step } else { self.base_step };
            let slack = 8.0 * f64::EPSILON * fy.abs().max(1.0);
            let mut accepted = None;
            for _ in 0..MAX_HALVINGS {
                let cand = Array1::from(project_l1_ball((&y - &(step * &gy)).as_slice().expect("contiguous"), radius)?);
                let diff = &cand - &y;
                let fc = self.risk.value(&cand);
                if fc <= fy + gy.dot(&diff) + diff.dot(&diff) / (2.0 * step) + slack {
                    accepted = Some((cand, fc));
                    break;
                }
                step *= 0.5;
            }
            let Some((cand, fc)) = accepted else { break };
            if fc > f + ARMIJO * g.dot(&(&cand - &beta)) + slack {
                if momentum == 1.0 {
                    break;
                }
                momentum = 1.0;
                (y, fy, gy) = (beta.clone(), f, g.clone());
                continue;
            }
            if cand == beta {
                break;
            }
            let next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
            let extrapolate = (momentum - 1.0) / next;
            y = &cand + &((&cand - &beta) * extrapolate);
            beta = cand;
            f = fc;
            g = self.risk.gradient(&beta);
            gap = frank_wolfe_gap(&g, &beta, radius);
            momentum = next;
            if extrapolate == 0.0 {
                (fy, gy) = (f, g.clone());
            } else {
                fy = self.risk.value(&y);
                gy = self.risk.gradient(&y);
            }
        }
        if self.adaptive_step {
            self.step = step;
        }
        if self.lambda > 0.0 {
            self.lower_bound = self.lower_bound.max(self.dual_bound(f, &g, &beta));
        }
        self.probes.push(Probe { radius, beta, risk: f, fw_gap: gap });
        Ok(self.probes.len() - 1)
    }

    fn risk_dim(&self) -> usize {
        match &self.risk {
            Risk::Quadratic { xty, .. } => xty.len(),
            Risk::Power { x, .. } => x.ncols(),
        }
    }

    /// Global lower bound on `min F` from the linearization of the risk at
    /// `beta`: `R(beta) - <g, beta> + min_s (lambda s^q - s ||g||_inf)`.
    fn dual_bound(&self, risk: f64, grad: &Array1<f64>, beta: &Array1<f64>) -> f64 {
        let sup = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
        let s = (sup / (self.q * self.lambda)).powf(1.0 / (self.q - 1.0));
        risk - grad.dot(beta) - (self.q - 1.0) * self.lambda * s.powf(self.q)
    }

    /// `V(r) + lambda r^q`, the one-dimensional outer objective.
    fn outer(&self, idx: usize) -> f64 {
        let p = &self.probes[idx];
        p.risk + self.lambda * p.radius.powf(self.q)
    }

    fn objective(&self, idx: usize) -> f64 {
        let p = &self.probes[idx];
        p.risk + self.lambda * l1_norm(p.beta.as_slice().expect("contiguous")).powf(self.q)
    }

    fn best(&self) -> usize {
        (0..self.probes.len())
            .min_by(|&a, &b| self.objective(a).total_cmp(&self.objective(b)))
            .expect("at least one probe")
    }

    fn duality_gap(&self) -> f64 {
        (self.objective(self.best()) - self.lower_bound).max(0.0)
    }
}

fn exact_risk(sample: &Sample, q: f64, beta: &[f64]) -> f64 {
    let beta = ndarray::ArrayView1::from(beta);
    let resid = sample.response() - &sample.design().dot(&beta);
    resid.iter().map(|r| r.abs().powf(q)).sum::<f64>() / sample.n() as f64
}

fn finish(sample: &Sample, q: f64, lambda: f64, probe: &Probe, gap: f64) -> RermSolution {
    let beta = probe.beta.to_vec();
    let objective = exact_risk(sample, q, &beta) + lambda * l1_norm(&beta).powf(q);
    RermSolution { beta, objective, inner_radius: probe.radius, optimality_gap: gap }
}

/// Minimizes `R_n^{(q)}(beta) + lambda ||beta||_1^q` by searching over the
/// l1-radius: `min_r V(r) + lambda r^q` with `V(r)` the constrained risk
/// minimum.
///
/// The outer problem is convex in `r` and solved by golden-section search
/// after doubling an upper radius from 1 until the outer objective rises;
/// each `V(r)` is computed by projected gradient with backtracking. For
/// `lambda > 0` the reported gap is a duality gap, valid regardless of how
/// accurately the inner problems were solved. For `lambda = 0` it combines
/// the inner Frank-Wolfe gap with the plateau of the radius doubling.
/// Degenerate designs return the minimizer reached from zero.
pub fn solve_lq_rerm(sample: &Sample, q: f64, penalty_coef: f64, tol: f64, max_iter: usize) -> Result<RermSolution> {
    ensure(q.is_finite() && q >= 2.0, || format!("q must be >= 2, got {q}"))?;
    ensure(penalty_coef.is_finite() && penalty_coef >= 0.0, || {
        format!("penalty coefficient must be finite and >= 0, got {penalty_coef}")
    })?;
    ensure(tol.is_finite() && tol > 0.0, || format!("tolerance must be > 0, got {tol}"))?;
    ensure(max_iter >= 1, || "max_iter must be >= 1".into())?;

    let mut search = RadiusSearch::new(sample, q, penalty_coef, 0.25 * tol, max_iter);
    let inner_tol = search.inner_tol;
    search.probe(0.0, inner_tol)?;

    let mut hi = 1.0;
    let mut half = search.probe(0.5, inner_tol)?;
    let mut top = search.probe(hi, inner_tol)?;
    loop {
        let (fh, ft) = (search.outer(half), search.outer(top));
        let rising = if penalty_coef > 0.0 { ft > fh } else { ft >= fh - inner_tol };
        if rising || hi >= RADIUS_CAP {
            break;
        }
        hi *= 2.0;
        half = top;
        top = search.probe(hi, inner_tol)?;
    }

    if penalty_coef == 0.0 {
        let best = search.best();
        let plateau = (search.outer(half) - search.outer(top)).max(0.0);
        let gap = search.probes[best].fw_gap.max(plateau);
        let sol = finish(sample, q, 0.0, &search.probes[best], gap);
        if gap <= tol && hi < RADIUS_CAP {
            return Ok(sol);
        }
        return Err(Error::IterationLimit { iterations: search.probes.len(), gap, best: Box::new(sol) });
    }

    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (if hi >= 2.0 { 0.25 * hi } else { 0.0 }, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut pc = search.probe(c, inner_tol)?;
    let mut pd = search.probe(d, inner_tol)?;
    let mut refined = false;
    let mut iterations = 0;
    while search.duality_gap() > tol && iterations < max_iter {
        iterations += 1;
        if b - a <= 1e-15 * b.max(f64::MIN_POSITIVE) {
            if refined {
                break;
            }
            // the bracket is exhausted; tighten the inner solve at the best radius
            refined = true;
            let r = search.probes[search.best()].radius;
            search.probe(r, 1e-3 * inner_tol)?;
            continue;
        }
        if search.outer(pc) <= search.outer(pd) {
            b = d;
            d = c;
            pd = pc;
            c = b - inv_phi * (b - a);
            pc = search.probe(c, inner_tol)?;
        } else {
            a = c;
            c = d;
            pc = pd;
            d = a + inv_phi * (b - a);
            pd = search.probe(d, inner_tol)?;
        }
    }
    let gap = search.duality_gap();
    let sol = finish(sample, q, penalty_coef, &search.probes[search.best()], gap);
    if gap <= tol {
        Ok(sol)
    } else {
        Err(Error::IterationLimit { iterations, gap, best: Box::new(sol) })
    }
}

/// `(1/n) sum (Y_i - <X_i, beta>)^2 + kappa ||beta||_1^2 / n`.
pub fn solve_square_lasso(sample: &Sample, kappa: f64, tol: f64, max_iter: usize) -> Result<RermSolution> {
    ensure(kappa.is_finite() && kappa >= 0.0, || format!("kappa must be finite and >= 0, got {kappa}"))?;
    solve_lq_rerm(sample, 2.0, kappa / sample.n() as f64, tol, max_iter)
}

/// `(1/n) sum (Y_i - <X_i, beta>)^2 + lambda1 ||beta||_1` by accelerated
/// proximal gradient with restarts. Stops once the gradient mapping
/// `L ||beta - prox(beta - grad / L)||_inf` is at most `tol`.
pub fn solve_lasso(sample: &Sample, lambda1: f64, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    ensure(lambda1.is_finite() && lambda1 >= 0.0, || format!("lambda1 must be finite and >= 0, got {lambda1}"))?;
    ensure(tol.is_finite() && tol > 0.0, || format!("tolerance must be > 0, got {tol}"))?;
    let risk = Risk::new(sample, 2.0);
    let lip = match risk.curvature() {
        l if l > 0.0 => 1.0001 * l,
        _ => 1.0,
    };
    let objective = |beta: &Array1<f64>| risk.value(beta) + lambda1 * beta.iter().map(|b| b.abs()).sum::<f64>();
    let prox_step = |beta: &Array1<f64>, grad: &Array1<f64>| {
        Array1::from_shape_fn(beta.len(), |j| soft_threshold(beta[j] - grad[j] / lip, lambda1 / lip))
    };

    let mut x = Array1::zeros(sample.d());
    let mut fx = objective(&x);
    let mut y = x.clone();
    let mut momentum = 1.0_f64;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let gx = risk.gradient(&x);
        residual = lip * (&x - &prox_step(&x, &gx)).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if residual <= tol {
            return Ok(x.to_vec());
        }
        let next = prox_step(&y, &risk.gradient(&y));
        let f_next = objective(&next);
        if f_next > fx && momentum > 1.0 {
            // restart the momentum from the current iterate
            y = x.clone();
            momentum = 1.0;
            continue;
        }
        let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        y = &next + &((momentum - 1.0) / m_next * (&next - &x));
        momentum = m_next;
        x = next;
        fx = f_next;
    }
    let beta = x.to_vec();
    let norm = l1_norm(&beta);
    let best = RermSolution {
        objective: exact_risk(sample, 2.0, &beta) + lambda1 * norm,
        beta,
        inner_radius: norm,
        optimality_gap: residual,
    };
    Err(Error::IterationLimit { iterations: max_iter, gap: residual, best: Box::new(best) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn projection_examples() {
        assert_eq!(project_l1_ball(&[0.2, -0.3], 1.0).unwrap(), vec![0.2, -0.3]);
        assert_eq!(project_l1_ball(&[3.0, 0.0], 1.0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(project_l1_ball(&[2.0, 1.0], 1.0).unwrap(), vec![1.0, 0.0]);
        assert_eq!(project_l1_ball(&[2.0, -1.0], 0.0).unwrap(), vec![0.0, 0.0]);
        assert!(project_l1_ball(&[1.0], -0.5).is_err());
    }

    fn small_sample() -> Sample {
        let x = array![[1.0, 0.3], [0.2, -1.0], [-0.7, 0.5], [1.5, 1.1], [0.1, 0.4], [-1.2, -0.3]];
        let y = array![1.0, -0.5, 0.2, 2.0, 0.3, -1.1];
        Sample::new(x, y).unwrap()
    }

    #[test]
    fn huge_penalty_gives_zero() {
        let s = small_sample();
        let sol = solve_lq_rerm(&s, 2.0, 1e9, 1e-9, 10_000).unwrap();
        assert!(l1_norm(&sol.beta) < 1e-8);
        let r0 = exact_risk(&s, 2.0, &[0.0, 0.0]);
        assert!((sol.objective - r0).abs() < 1e-6);
    }

    #[test]
    fn unpenalized_intercept_is_mean() {
        let y = [0.5, 1.5, 2.0, 4.0];
        let s = Sample::from_columns(&[1.0; 4], &y).unwrap();
        let sol = solve_lq_rerm(&s, 2.0, 0.0, 1e-10, 10_000).unwrap();
        assert!((sol.beta[0] - 2.0).abs() < 1e-5, "{:?}", sol);
    }

    #[test]
    fn zero_response_gives_zero() {
        let mut s = small_sample();
        s = Sample::new(s.design().clone(), Array1::zeros(s.n())).unwrap();
        let sol = solve_square_lasso(&s, 3.0, 1e-10, 1000).unwrap();
        assert_eq!(sol.beta, vec![0.0, 0.0]);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn objective_matches_recomputation() {
        let s = small_sample();
        for q in [2.0, 3.0, 4.0] {
            let sol = solve_lq_rerm(&s, q, 0.3, 1e-8, 100_000).unwrap();
            let direct = exact_risk(&s, q, &sol.beta) + 0.3 * l1_norm(&sol.beta).powf(q);
            assert!((sol.objective - direct).abs() < 1e-10);
            assert!(l1_norm(&sol.beta) <= sol.inner_radius + 1e-10);
            assert!(sol.optimality_gap <= 1e-8);
        }
    }

    #[test]
    fn constrained_risk_is_convex_and_nonincreasing() {
        let s = small_sample();
        for q in [2.0, 3.0] {
            let mut search = RadiusSearch::new(&s, q, 0.0, 1e-12, 100_000);
            let radii: Vec<f64> = (0..=40).map(|k| 0.05 * k as f64).collect();
            let v: Vec<f64> =
                radii.iter().map(|&r| search.probe(r, 1e-12).map(|i| search.probes[i].risk).unwrap()).collect();
            for w in v.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
            for w in v.windows(3) {
                assert!(w[0] + w[2] - 2.0 * w[1] >= -1e-8);
            }
        }
    }

    #[test]
    fn lasso_threshold_and_least_squares() {
        let s = small_sample();
        let xty = s.design().t().dot(s.response());
        let lam = 2.0 * xty.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / s.n() as f64;
        assert_eq!(solve_lasso(&s, lam, 1e-10, 10_000).unwrap(), vec![0.0, 0.0]);

        let ls = solve_lasso(&s, 0.0, 1e-11, 100_000).unwrap();
        let g = s.design().t().dot(s.design());
        let resid = &g.dot(&Array1::from(ls.clone())) - &xty;
        assert!(resid.iter().all(|v| v.abs() < 1e-9));
    }
}

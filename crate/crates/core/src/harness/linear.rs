use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp, StandardNormal};

use super::finite::par_map;
use super::{
    require_scenario, Noise, OracleReport, RowRecord, Scenario, ScenarioConfig, ScenarioOutput, Series, SeriesPoint,
};
use crate::concentration::psi_alpha_norm;
use crate::error::{ensure, invalid, Error, Result};
use crate::model::{l1_norm, Sample, SampleGenerator};
use crate::seeds::task_rng;
use crate::solvers::{canonical_kappa, solve_lq_rerm, solve_square_lasso, theorem_c_penalty, RermSolution};

/// `Y = <X, beta*> + noise` with i.i.d. design entries, standard Gaussian
/// or uniform on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseLinearModel {
    pub beta_star: Vec<f64>,
    pub noise: Noise,
    pub bounded_design: bool,
}

impl SampleGenerator for SparseLinearModel {
    fn generate(&self, n: usize, rng: &mut dyn RngCore) -> Result<Sample> {
        let d = self.beta_star.len();
        let mut x = Array2::zeros((n, d));
        let mut y = Array1::zeros(n);
        for i in 0..n {
            let mut signal = 0.0;
            for j in 0..d {
                let v: f64 =
                    if self.bounded_design { rng.random_range(-1.0..=1.0) } else { StandardNormal.sample(rng) };
                x[[i, j]] = v;
                signal += v * self.beta_star[j];
            }
            let noise = match self.noise {
                Noise::Gaussian { sd } => {
                    let z: f64 = StandardNormal.sample(rng);
                    sd * z
                }
                Noise::Bounded { range } => range * rng.random_range(-1.0..=1.0),
                Noise::Exponential { rate } => {
                    let e: f64 = Exp::new(rate).map_err(|e| Error::InvalidInput(e.to_string()))?.sample(rng);
                    e - 1.0 / rate
                }
            };
            y[i] = signal + noise;
        }
        Sample::new(x, y)
    }
}

/// Population `L_q` risk estimated on a fixed test set. Squares go through
/// the test Gram matrix.
enum TestRisk {
    Quadratic { gram: Array2<f64>, xty: Array1<f64>, yy: f64 },
    Power { test: Sample, q: f64 },
}

impl TestRisk {
    fn new(test: Sample, q: f64) -> Self {
        if q == 2.0 {
            let (x, y) = (test.design(), test.response());
            let m = test.n() as f64;
            TestRisk::Quadratic { gram: x.t().dot(x) / m, xty: x.t().dot(y) / m, yy: y.dot(y) / m }
        } else {
            TestRisk::Power { test, q }
        }
    }

    fn eval(&self, beta: &[f64]) -> f64 {
        let beta = ArrayView1::from(beta);
        match self {
            TestRisk::Quadratic { gram, xty, yy } => (beta.dot(&gram.dot(&beta)) - 2.0 * xty.dot(&beta) + yy).max(0.0),
            TestRisk::Power { test, q } => {
                let resid = test.response() - &test.design().dot(&beta);
                resid.iter().map(|r| r.abs().powf(*q)).sum::<f64>() / test.n() as f64
            }
        }
    }
}

const TEST_SALT: u64 = 0x300;

/// `||Y||_psi_q` and `|| ||X||_inf ||_psi_q` on the test set, whichever is larger.
fn estimate_kd(test: &Sample, q: f64) -> Result<f64> {
    let sup_rows: Vec<f64> =
        test.design().rows().into_iter().map(|r| r.iter().fold(0.0_f64, |m, v| m.max(v.abs()))).collect();
    let ky = psi_alpha_norm(test.response().as_slice().expect("contiguous"), q, 1e-9)?.value;
    let kx = psi_alpha_norm(&sup_rows, q, 1e-9)?.value;
    let kd = ky.max(kx);
    ensure(kd > 0.0, || "test set is identically zero; K(d) must be > 0".into())?;
    Ok(kd)
}

/// Regularized least-`L_q` over l1-balls on sparse linear data.
///
/// Every replication solves the penalized problem with penalty
/// `lambda(n, d, x) ||beta||_1^q / (n eps^2)` and compares the test-set risk
/// of the estimate with that of `beta*`, against the budget
/// `lambda(n, d, x) (1 + ||beta*||_1^q) / (n eps^2)`. `K(d)` is estimated
/// from the test set. Solver runs that hit the iteration limit contribute
/// their best iterate and are counted in `solverFailures`.
fn run_linear(config: &ScenarioConfig, scenario: Scenario, q: f64) -> Result<ScenarioOutput> {
    match (config.noise, q > 2.0) {
        (Noise::Exponential { .. }, _) => {
            return invalid("noise: exponential noise violates the psi_q moment assumption on Y")
        }
        (Noise::Gaussian { .. }, true) => return invalid("noise: q > 2 requires bounded noise and a bounded design"),
        _ => {}
    }
    let eps = config.epsilon;
    let c0 = config.constant("c0");
    let d = config.d;
    let tag = scenario.seed_tag();
    let model =
        SparseLinearModel { beta_star: config.beta_star.vector(d), noise: config.noise, bounded_design: q > 2.0 };
    let beta_norm_q = l1_norm(&model.beta_star).powf(q);

    let mut rng = task_rng(config.master_seed, tag ^ TEST_SALT, 0, 0);
    let test = model.generate(config.test_set_size(), &mut rng)?;
    let kd = estimate_kd(&test, q)?;
    let test_risk = TestRisk::new(test, q);
    let oracle = test_risk.eval(&model.beta_star);

    let mut rows = Vec::new();
    let names = ["nonexact", "exact", "satisfied", "solverFailures", "penalty", "budget", "Kd"];
    let mut points: Vec<Vec<SeriesPoint>> = vec![Vec::new(); names.len()];
    for &n in &config.n_grid {
        let nf = n as f64;
        let lambda = theorem_c_penalty(nf, d as f64, config.x, q, kd, c0)?;
        let budget = lambda * (1.0 + beta_norm_q) / (nf * eps * eps);
        let kappa = match config.kappa {
            Some(k) => k,
            None => canonical_kappa(nf, d as f64, config.x, kd, eps, c0)?,
        };
        let penalty_coef = if q == 2.0 { kappa / nf } else { lambda / (nf * eps * eps) };
        let reps = par_map(config.replications, |r| {
            let mut rng = task_rng(config.master_seed, tag, n as u64, r as u64);
            let sample = model.generate(n, &mut rng)?;
            let solved = if q == 2.0 {
                solve_square_lasso(&sample, kappa, config.tol, config.max_iter)
            } else {
                solve_lq_rerm(&sample, q, penalty_coef, config.tol, config.max_iter)
            };
            let (solution, failed): (RermSolution, bool) = match solved {
                Ok(s) => (s, false),
                Err(Error::IterationLimit { best, .. }) => (*best, true),
                Err(e) => return Err(e),
            };
            let achieved = test_risk.eval(&solution.beta);
            Ok((OracleReport::new(n, achieved, oracle, eps, budget), failed))
        })?;

        let column = |f: &dyn Fn(&(OracleReport, bool)) -> f64| reps.iter().map(f).collect::<Vec<f64>>();
        points[0].push(SeriesPoint::floored(n, &column(&|r| r.0.slack_nonexact), config.floor)?);
        points[1].push(SeriesPoint::from_values(n, &column(&|r| r.0.slack_exact))?);
        points[2].push(SeriesPoint::from_values(n, &column(&|r| f64::from(u8::from(r.0.satisfied))))?);
        points[3].push(SeriesPoint::from_values(n, &column(&|r| f64::from(u8::from(r.1))))?);
        points[4].push(SeriesPoint::exact(n, penalty_coef));
        points[5].push(SeriesPoint::exact(n, budget));
        points[6].push(SeriesPoint::exact(n, kd));
        rows.extend(reps.into_iter().enumerate().map(|(replication, (report, _))| RowRecord {
            scenario,
            replication,
            report,
        }));
    }
    let mut series: Vec<Series> = Vec::new();
    for (name, pts) in names.iter().zip(points) {
        series.push(if *name == "nonexact" { Series::fitted(name, pts, config.floor) } else { Series::new(name, pts) });
    }
    Ok(ScenarioOutput { scenario, rows, series })
}

/// Square-LASSO (`q = 2`) with `kappa = lambda(n, d, x) / eps^2`, or the
/// configured `kappa`.
pub fn run_square_lasso(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    require_scenario(config, &[Scenario::SquareLasso])?;
    ensure(config.q == 2.0, || format!("q: SquareLasso is the q = 2 estimator, got q = {}", config.q))?;
    run_linear(config, Scenario::SquareLasso, 2.0)
}

/// The `||beta||_1^q`-penalized `L_q` estimator; `q = 2` follows the
/// square-LASSO path exactly.
pub fn run_lq_rerm(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    require_scenario(config, &[Scenario::LqRerm])?;
    run_linear(config, Scenario::LqRerm, config.q)
}

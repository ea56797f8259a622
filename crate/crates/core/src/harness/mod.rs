//! Monte Carlo experiments: finite-model exact versus nonexact slack,
//! isomorphy event frequencies, and the `1/n` residual of regularized
//! least-`L_q` estimators over l1-balls.

mod config;
mod finite;
mod linear;
mod output;

use serde::{Deserialize, Serialize};

pub use config::{BetaStarSpec, Noise, Scenario, ScenarioConfig, CONSTANT_NAMES};
pub use finite::{run_finite_gap, run_isomorphy, ThresholdDictionary, TwoFunctionModel};
pub use linear::{run_lq_rerm, run_square_lasso, SparseLinearModel};
pub use output::{write_rows_csv, write_summary_csv, ROWS_HEADER, SUMMARY_HEADER};

use crate::error::{ensure, Error, Result};
use crate::model::RiskEstimate;

/// Outcome of one estimator on one sample, compared with the best function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleReport {
    pub n: usize,
    pub achieved_risk: f64,
    pub oracle_risk: f64,
    pub epsilon: f64,
    pub residual_budget: f64,
    /// `achieved - (1 + 3 eps) oracle`.
    pub slack_nonexact: f64,
    /// `achieved - oracle`.
    pub slack_exact: f64,
    pub satisfied: bool,
}

impl OracleReport {
    pub fn new(n: usize, achieved_risk: f64, oracle_risk: f64, epsilon: f64, residual_budget: f64) -> Self {
        let slack_nonexact = achieved_risk - (1.0 + 3.0 * epsilon) * oracle_risk;
        Self {
            n,
            achieved_risk,
            oracle_risk,
            epsilon,
            residual_budget,
            slack_nonexact,
            slack_exact: achieved_risk - oracle_risk,
            satisfied: slack_nonexact <= residual_budget,
        }
    }
}

/// One row of `rows.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowRecord {
    pub scenario: Scenario,
    pub replication: usize,
    pub report: OracleReport,
}

/// Ordinary least squares of `log value` on `log n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: Vec<(f64, f64)>,
    /// Points whose value had been raised to the positive floor.
    pub floored: usize,
}

/// Log-log fit over the points with positive value; at least three needed.
/// A perfect fit, including a constant series, has `R^2 = 1`.
pub fn rate_fit(points: &[(f64, f64)]) -> Result<RateFit> {
    let usable: Vec<(f64, f64)> =
        points.iter().copied().filter(|&(n, v)| n > 0.0 && v > 0.0 && n.is_finite() && v.is_finite()).collect();
    ensure(usable.len() >= 3, || format!("rate fit needs >= 3 positive points, got {}", usable.len()))?;
    let xs: Vec<f64> = usable.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    ensure(sxx > 0.0, || "rate fit needs at least two distinct n".into())?;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot <= f64::EPSILON * m * my.abs().max(1.0).powi(2) {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(RateFit { slope, intercept, r_squared, points: usable, floored: 0 })
}

/// Per-`n` aggregate of one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SeriesPoint {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
    /// Replications whose value was raised to the floor.
    pub floored: usize,
}

impl SeriesPoint {
    pub fn from_values(n: usize, values: &[f64]) -> Result<Self> {
        let est = RiskEstimate::from_values(values)?;
        Ok(Self { n, mean: est.mean, stderr: est.stderr, count: est.count, floored: 0 })
    }

    /// Mean of `max(v, floor)`.
    pub fn floored(n: usize, values: &[f64], floor: f64) -> Result<Self> {
        let floored = values.iter().filter(|&&v| v <= floor).count();
        let raised: Vec<f64> = values.iter().map(|v| v.max(floor)).collect();
        Ok(Self { floored, ..Self::from_values(n, &raised)? })
    }

    pub fn exact(n: usize, value: f64) -> Self {
        Self { n, mean: value, stderr: 0.0, count: 1, floored: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub points: Vec<SeriesPoint>,
    pub fit: Option<RateFit>,
}

impl Series {
    pub fn new(name: &str, points: Vec<SeriesPoint>) -> Self {
        Self { name: name.to_string(), points, fit: None }
    }

    /// Attaches a log-log fit of the means when at least three are
    /// positive, counting points that sit at the floor.
    pub fn fitted(name: &str, points: Vec<SeriesPoint>, floor: f64) -> Self {
        let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.n as f64, p.mean)).collect();
        let fit = rate_fit(&pairs).ok().map(|mut fit| {
            fit.floored = points.iter().filter(|p| p.mean <= floor).count();
            fit
        });
        Self { name: name.to_string(), points, fit }
    }
}

/// Everything a scenario run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub scenario: Scenario,
    pub rows: Vec<RowRecord>,
    pub series: Vec<Series>,
}

impl ScenarioOutput {
    pub fn series(&self, name: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn fit(&self, name: &str) -> Option<&RateFit> {
        self.series(name).and_then(|s| s.fit.as_ref())
    }

    /// Fraction of rows whose nonexact slack is within budget.
    pub fn satisfaction_frequency(&self) -> f64 {
        let hits = self.rows.iter().filter(|r| r.report.satisfied).count();
        hits as f64 / self.rows.len().max(1) as f64
    }
}

/// Runs `f` on a dedicated pool of `workers` threads (machine parallelism
/// when `None`). Results never depend on the worker count: every task owns
/// a derived random stream and outputs are collected in index order.
pub fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        ensure(w >= 1, || "workers must be >= 1".into())?;
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(pool.install(f))
}

/// Dispatches on `config.scenario` inside a pool of `workers` threads.
pub fn run_scenario(config: &ScenarioConfig, workers: Option<usize>) -> Result<ScenarioOutput> {
    with_workers(workers, || match config.scenario {
        Scenario::FiniteGap => run_finite_gap(config),
        Scenario::Isomorphy => run_isomorphy(config),
        Scenario::SquareLasso => run_square_lasso(config),
        Scenario::LqRerm => run_lq_rerm(config),
    })?
}

pub(crate) fn require_scenario(config: &ScenarioConfig, allowed: &[Scenario]) -> Result<()> {
    config.validate()?;
    ensure(allowed.contains(&config.scenario), || {
        format!("scenario {} cannot be run by this experiment", config.scenario.name())
    })
}

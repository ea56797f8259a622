//! Data, function classes, losses, and empirical risk minimization over
//! finite dictionaries.

use ndarray::{Array1, Array2, ArrayView1};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Result};

/// Observations `(X_i, Y_i)`: an `n x d` design and `n` responses.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    design: Array2<f64>,
    response: Array1<f64>,
}

impl Sample {
    pub fn new(design: Array2<f64>, response: Array1<f64>) -> Result<Self> {
        let (n, d) = design.dim();
        ensure(n >= 1 && d >= 1, || format!("sample must be at least 1x1, got {n}x{d}"))?;
        ensure(response.len() == n, || format!("response length {} does not match {n} design rows", response.len()))?;
        ensure(design.iter().chain(response.iter()).all(|v| v.is_finite()), || {
            "sample contains a non-finite entry".to_string()
        })?;
        Ok(Self { design, response })
    }

    /// Single-column sample, convenient for scalar covariates.
    pub fn from_columns(x: &[f64], y: &[f64]) -> Result<Self> {
        let design =
            Array2::from_shape_vec((x.len(), 1), x.to_vec()).map_err(|e| crate::Error::InvalidInput(e.to_string()))?;
        Self::new(design, Array1::from_vec(y.to_vec()))
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn d(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> &Array2<f64> {
        &self.design
    }

    pub fn response(&self) -> &Array1<f64> {
        &self.response
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.design.row(i)
    }

    /// Largest sup-norm of a design row, `max_i ||X_i||_inf`.
    pub fn max_row_sup_norm(&self) -> f64 {
        self.design.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossSpec {
    /// `|y - f(x)|^q`, `q >= 2`.
    Lq(f64),
    /// `1{sign f(x) != y}` with responses in `{-1, +1}`.
    ZeroOne,
}

impl LossSpec {
    pub fn lq(q: f64) -> Result<Self> {
        ensure(q.is_finite() && q >= 2.0, || format!("L_q loss needs q >= 2, got {q}"))?;
        Ok(LossSpec::Lq(q))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LossSpec::Lq(q) if !(q.is_finite() && q >= 2.0) => invalid(format!("L_q loss needs q >= 2, got {q}")),
            _ => Ok(()),
        }
    }

    /// Per-sample loss of `prediction` against `response`.
    pub fn loss(&self, prediction: f64, response: f64) -> f64 {
        match *self {
            LossSpec::Lq(q) => {
                let r = (response - prediction).abs();
                if q == 2.0 {
                    r * r
                } else {
                    r.powf(q)
                }
            }
            LossSpec::ZeroOne => {
                if sign(prediction) != sign(response) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Checks that `sample` is compatible with this loss.
    pub fn check_sample(&self, sample: &Sample) -> Result<()> {
        self.validate()?;
        if matches!(self, LossSpec::ZeroOne) {
            ensure(sample.response().iter().all(|&y| y == 1.0 || y == -1.0), || {
                "zero-one loss requires responses in {-1, +1}".to_string()
            })?;
        }
        Ok(())
    }
}

/// Sign with the convention `sign(0) = +1`.
pub fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// A finite dictionary `F = {f_1, .., f_M}` evaluated on a sample: row `j`
/// holds `f_j(X_1), .., f_j(X_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteModel {
    predictions: Array2<f64>,
    true_risks: Option<Vec<f64>>,
}

impl FiniteModel {
    pub fn new(predictions: Array2<f64>, true_risks: Option<Vec<f64>>) -> Result<Self> {
        ensure(predictions.nrows() >= 1, || "finite model must contain a function".into())?;
        ensure(predictions.iter().all(|v| v.is_finite()), || "finite model predictions must be finite".into())?;
        if let Some(risks) = &true_risks {
            ensure(risks.len() == predictions.nrows(), || {
                format!("{} true risks for {} functions", risks.len(), predictions.nrows())
            })?;
            ensure(risks.iter().all(|r| r.is_finite() && *r >= 0.0), || {
                "true risks must be finite and nonnegative".into()
            })?;
        }
        Ok(Self { predictions, true_risks })
    }

    /// Number of functions `M`.
    pub fn size(&self) -> usize {
        self.predictions.nrows()
    }

    pub fn predictions(&self) -> &Array2<f64> {
        &self.predictions
    }

    pub fn true_risks(&self) -> Option<&[f64]> {
        self.true_risks.as_deref()
    }

    /// Per-sample losses of function `j`.
    pub fn losses(&self, j: usize, sample: &Sample, loss: LossSpec) -> Vec<f64> {
        self.predictions.row(j).iter().zip(sample.response()).map(|(&p, &y)| loss.loss(p, y)).collect()
    }

    /// Empirical risks `R_n(f_j)` of every function.
    pub fn empirical_risks(&self, sample: &Sample, loss: LossSpec) -> Result<Vec<f64>> {
        ensure(self.predictions.ncols() == sample.n(), || {
            format!("model evaluated on {} points but sample has {}", self.predictions.ncols(), sample.n())
        })?;
        loss.check_sample(sample)?;
        (0..self.size()).map(|j| empirical_risk(&self.losses(j, sample, loss))).collect()
    }
}

/// `F_r = {x -> <x, beta> : ||beta||_1 <= r}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1BallModel {
    radius: f64,
}

impl L1BallModel {
    pub fn new(radius: f64) -> Result<Self> {
        ensure(radius.is_finite() && radius >= 0.0, || format!("l1 radius must be nonnegative, got {radius}"))?;
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, beta: &[f64], tol: f64) -> bool {
        l1_norm(beta) <= self.radius + tol
    }
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl RiskEstimate {
    /// Sample mean and `sd / sqrt(count)`; a single value has zero stderr.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        ensure(!values.is_empty(), || "cannot summarize an empty set of values".into())?;
        let count = values.len();
        let mean = values.iter().sum::<f64>() / count as f64;
        let stderr = if count > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64;
            (var / count as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self { mean, stderr, count })
    }
}

/// `R_n = (1/n) sum_i loss_i`.
pub fn empirical_risk(losses: &[f64]) -> Result<f64> {
    ensure(!losses.is_empty(), || "empirical risk of zero samples".into())?;
    ensure(losses.iter().all(|l| l.is_finite()), || "non-finite loss value".into())?;
    ensure(losses.iter().all(|&l| l >= 0.0), || "negative loss value".into())?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Empirical risk of the linear predictor `x -> <x, beta>`.
pub fn empirical_risk_linear(beta: &[f64], sample: &Sample, loss: LossSpec) -> Result<f64> {
    ensure(beta.len() == sample.d(), || {
        format!("beta has length {} but design has {} columns", beta.len(), sample.d())
    })?;
    loss.check_sample(sample)?;
    let losses: Vec<f64> = (0..sample.n())
        .map(|i| {
            let p: f64 = sample.row(i).iter().zip(beta).map(|(a, b)| a * b).sum();
            loss.loss(p, sample.response()[i])
        })
        .collect();
    empirical_risk(&losses)
}

/// Lowest index whose risk is within `slack` of the minimum.
pub fn erm_index(risks: &[f64], slack: f64) -> Result<usize> {
    ensure(!risks.is_empty(), || "ERM over an empty model".into())?;
    ensure(slack.is_finite() && slack >= 0.0, || format!("ERM slack must be >= 0, got {slack}"))?;
    ensure(risks.iter().all(|r| r.is_finite()), || "non-finite empirical risk".into())?;
    let min = risks.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(risks.iter().position(|&r| r <= min + slack).expect("minimum is attained"))
}

/// Empirical risk minimizer over a finite model, ties broken to the lowest index.
pub fn erm_finite(model: &FiniteModel, sample: &Sample, loss: LossSpec, slack: f64) -> Result<usize> {
    let risks = model.empirical_risks(sample, loss)?;
    erm_index(&risks, slack)
}

pub trait Predictor: Sync {
    fn predict(&self, x: ArrayView1<'_, f64>) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearPredictor(pub Array1<f64>);

impl Predictor for LinearPredictor {
    fn predict(&self, x: ArrayView1<'_, f64>) -> f64 {
        x.dot(&self.0)
    }
}

/// Constant prediction regardless of covariates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantPredictor(pub f64);

impl Predictor for ConstantPredictor {
    fn predict(&self, _x: ArrayView1<'_, f64>) -> f64 {
        self.0
    }
}

/// Draws fresh i.i.d. samples from a fixed distribution of `(X, Y)`.
pub trait SampleGenerator: Sync {
    fn generate(&self, n: usize, rng: &mut dyn RngCore) -> Result<Sample>;
}

/// Average loss of `predictor` over a given test sample.
pub fn risk_on_sample(predictor: &dyn Predictor, test: &Sample, loss: LossSpec) -> Result<RiskEstimate> {
    loss.check_sample(test)?;
    let losses: Vec<f64> =
        (0..test.n()).map(|i| loss.loss(predictor.predict(test.row(i)), test.response()[i])).collect();
    ensure(losses.iter().all(|l| l.is_finite()), || "non-finite loss value".into())?;
    RiskEstimate::from_values(&losses)
}

/// Monte Carlo estimate of `R(f) = E loss(f(X), Y)` on a fresh sample.
pub fn risk_estimate(
    predictor: &dyn Predictor,
    generator: &dyn SampleGenerator,
    loss: LossSpec,
    test_size: usize,
    rng: &mut dyn RngCore,
) -> Result<RiskEstimate> {
    ensure(test_size >= 2, || format!("test size must be >= 2, got {test_size}"))?;
    let test = generator.generate(test_size, rng)?;
    risk_on_sample(predictor, &test, loss)
}

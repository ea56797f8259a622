use ndarray::Array2;
use rand::{Rng, RngCore};
use rand_distr::{Binomial, Distribution};

use super::{require_scenario, OracleReport, RowRecord, Scenario, ScenarioConfig, ScenarioOutput, Series, SeriesPoint};
use crate::complexity::{fixed_point_lambda, ClassDraw, LocalizedProcess};
use crate::concentration::{bernstein_from_psi1, envelope_bn, psi_alpha_norm};
use crate::error::{ensure, Error, Result};
use crate::model::{erm_finite, erm_index, sign, FiniteModel, LossSpec, Sample};
use crate::seeds::task_rng;
use crate::solvers::rho_n_theorem_a;

pub(crate) fn par_map<T: Send>(count: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

/// Two classifiers on `X ~ U[0, 1]` that disagree on `[0, width)`:
/// `f_1 = +1` everywhere and `f_2 = -1` on the region. Labels are `+1` off
/// the region and `+1` with probability `(1 + bias) / 2` on it, so
/// `R(f_1) = width (1 - bias) / 2` and `R(f_2) = width (1 + bias) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoFunctionModel {
    pub width: f64,
    pub bias: f64,
}

impl TwoFunctionModel {
    pub fn new(width: f64, bias: f64) -> Result<Self> {
        ensure((0.0..=1.0).contains(&width), || format!("width must lie in [0, 1], got {width}"))?;
        ensure((0.0..=1.0).contains(&bias), || format!("bias must lie in [0, 1], got {bias}"))?;
        Ok(Self { width, bias })
    }

    pub fn risks(&self) -> [f64; 2] {
        [0.5 * self.width * (1.0 - self.bias), 0.5 * self.width * (1.0 + self.bias)]
    }

    pub fn sample(&self, n: usize, rng: &mut dyn RngCore) -> Result<Sample> {
        let p_plus = 0.5 * (1.0 + self.bias);
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.random();
            let y = if x < self.width && rng.random::<f64>() >= p_plus { -1.0 } else { 1.0 };
            xs.push(x);
            ys.push(y);
        }
        Sample::from_columns(&xs, &ys)
    }

    /// Predictions of both functions on the sample's covariates.
    pub fn finite_model(&self, sample: &Sample) -> Result<FiniteModel> {
        let n = sample.n();
        let preds =
            Array2::from_shape_fn(
                (2, n),
                |(j, i)| {
                    if j == 1 && sample.design()[[i, 0]] < self.width {
                        -1.0
                    } else {
                        1.0
                    }
                },
            );
        FiniteModel::new(preds, Some(self.risks().to_vec()))
    }

    /// ERM index computed from the sufficient counts: the number of region
    /// points and how many of them carry `+1`.
    pub fn erm_from_counts(&self, n: usize, rng: &mut dyn RngCore) -> Result<usize> {
        let binom = |trials: u64, p: f64| Binomial::new(trials, p).map_err(|e| Error::InvalidInput(e.to_string()));
        let in_region = binom(n as u64, self.width)?.sample(rng);
        let plus = binom(in_region, 0.5 * (1.0 + self.bias))?.sample(rng);
        let minus = in_region - plus;
        erm_index(&[minus as f64 / n as f64, plus as f64 / n as f64], 0.0)
    }
}

/// Two-function models on which the nonexact slack can be positive: risk
/// gaps `2^(-14)..2^(-1)` in quarter-octave steps, and region widths from
/// the gap itself upward in half-octave steps, with `bias = gap / width`.
pub fn gap_family() -> Vec<TwoFunctionModel> {
    let mut family = Vec::new();
    for k in 0..=52 {
        let gap = 2f64.powf(-14.0 + 0.25 * k as f64);
        for j in 0.. {
            let width = gap * 2f64.powf(0.5 * j as f64);
            if width > 1.0 {
                break;
            }
            family.push(TwoFunctionModel { width, bias: gap / width });
        }
    }
    family
}

struct GapReplication {
    report: OracleReport,
    family_slacks: Vec<f64>,
}

/// Exact versus nonexact slack of ERM over two functions.
///
/// The exact series uses the two-function model with full-width
/// disagreement and risk gap `gamma / sqrt(n)`, where ERM's exact excess
/// risk is of order `n^(-1/2)`. The nonexact series is the worst case of
/// the replication-mean floored slack over `gap_family`, since the `(1+3eps)`
/// margin swallows the gap of any single fixed-width model. Rows report the
/// first model with budget `c0 (x + log 2) / (eps n)`.
pub fn run_finite_gap(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    require_scenario(config, &[Scenario::FiniteGap])?;
    let eps = config.epsilon;
    let c0 = config.constant("c0");
    let family = gap_family();
    let tag = Scenario::FiniteGap.seed_tag();

    let mut rows = Vec::new();
    let (mut exact_pts, mut nonexact_pts, mut single_pts) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &config.n_grid {
        let model = TwoFunctionModel::new(1.0, (config.gamma / (n as f64).sqrt()).min(1.0))?;
        let risks = model.risks();
        let oracle = risks[0].min(risks[1]);
        let budget = c0 * (config.x + 2f64.ln()) / (eps * n as f64);
        let reps = par_map(config.replications, |r| {
            let mut rng = task_rng(config.master_seed, tag, n as u64, r as u64);
            let sample = model.sample(n, &mut rng)?;
            let chosen = erm_finite(&model.finite_model(&sample)?, &sample, LossSpec::ZeroOne, 0.0)?;
            let report = OracleReport::new(n, risks[chosen], oracle, eps, budget);
            let family_slacks = family
                .iter()
                .map(|m| {
                    let [r1, r2] = m.risks();
                    let pick = m.erm_from_counts(n, &mut rng)?;
                    Ok([r1, r2][pick] - (1.0 + 3.0 * eps) * r1.min(r2))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(GapReplication { report, family_slacks })
        })?;

        let exact: Vec<f64> = reps.iter().map(|g| g.report.slack_exact).collect();
        let single: Vec<f64> = reps.iter().map(|g| g.report.slack_nonexact).collect();
        exact_pts.push(SeriesPoint::floored(n, &exact, config.floor)?);
        single_pts.push(SeriesPoint::floored(n, &single, config.floor)?);
        let worst = (0..family.len())
            .map(|k| {
                let values: Vec<f64> = reps.iter().map(|g| g.family_slacks[k]).collect();
                SeriesPoint::floored(n, &values, config.floor)
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max_by(|a, b| a.mean.total_cmp(&b.mean))
            .expect("family is nonempty");
        nonexact_pts.push(worst);
        rows.extend(reps.into_iter().enumerate().map(|(replication, g)| RowRecord {
            scenario: Scenario::FiniteGap,
            replication,
            report: g.report,
        }));
    }
    Ok(ScenarioOutput {
        scenario: Scenario::FiniteGap,
        rows,
        series: vec![
            Series::fitted("nonexact", nonexact_pts, config.floor),
            Series::fitted("exact", exact_pts, config.floor),
            Series::new("nonexactSingleModel", single_pts),
        ],
    })
}

/// Threshold classifiers `f_j(x) = sign(x - t_j)` on `X ~ U[0, 1]` with
/// labels `sign(X - 1/2)` flipped with probability `label_noise`, so
/// `R(f_j) = eta + (1 - 2 eta) |t_j - 1/2|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdDictionary {
    pub thresholds: Vec<f64>,
    pub label_noise: f64,
}

impl ThresholdDictionary {
    /// `m` thresholds evenly spaced on `[0, 1]`; a single one sits at `1/2`.
    pub fn new(m: usize, label_noise: f64) -> Result<Self> {
        ensure(m >= 1, || "dictionary needs at least one function".into())?;
        ensure((0.0..=0.5).contains(&label_noise), || format!("label noise must lie in [0, 1/2], got {label_noise}"))?;
        let thresholds = if m == 1 { vec![0.5] } else { (0..m).map(|j| j as f64 / (m - 1) as f64).collect() };
        Ok(Self { thresholds, label_noise })
    }

    pub fn risks(&self) -> Vec<f64> {
        let eta = self.label_noise;
        self.thresholds.iter().map(|t| eta + (1.0 - 2.0 * eta) * (t - 0.5).abs()).collect()
    }

    pub fn sample(&self, n: usize, rng: &mut dyn RngCore) -> Result<Sample> {
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x: f64 = rng.random();
            let flip = rng.random::<f64>() < self.label_noise;
            let y = sign(x - 0.5);
            xs.push(x);
            ys.push(if flip { -y } else { y });
        }
        Sample::from_columns(&xs, &ys)
    }

    pub fn finite_model(&self, sample: &Sample) -> Result<FiniteModel> {
        let x = sample.design().column(0);
        let preds =
            Array2::from_shape_fn((self.thresholds.len(), sample.n()), |(j, i)| sign(x[i] - self.thresholds[j]));
        FiniteModel::new(preds, Some(self.risks()))
    }
}

/// Per-sample losses `l_j(Z_i)` of every dictionary element.
fn loss_matrix(model: &FiniteModel, sample: &Sample) -> Vec<Vec<f64>> {
    (0..model.size()).map(|j| model.losses(j, sample, LossSpec::ZeroOne)).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

const LAMBDA_SALT: u64 = 0x100;
const PSI_SALT: u64 = 0x200;

/// Frequency of the isomorphy event
/// `P l_f <= (1 + 2 eps) P_n l_f + rho_n(x)` for every `f` in a threshold
/// dictionary, together with the ingredients of `rho_n(x)`.
///
/// `lambda*` is the fixed point of the Monte Carlo localized supremum of the
/// loss class, `b_n` the psi_1 norm of the per-replication envelope maxima,
/// and `B_n` the Bernstein constant from the largest empirical psi_1 norm of
/// a loss. Band series repeat the event with `lambda*` taken from the mean
/// localized supremum shifted by two standard errors.
pub fn run_isomorphy(config: &ScenarioConfig) -> Result<ScenarioOutput> {
    require_scenario(config, &[Scenario::Isomorphy])?;
    let eps = config.epsilon;
    let c0 = config.constant("c0");
    let dict = ThresholdDictionary::new(config.dictionary_size, config.label_noise)?;
    let risks = dict.risks();
    let oracle = risks.iter().cloned().fold(f64::INFINITY, f64::min);
    let tag = Scenario::Isomorphy.seed_tag();
    let target = 1.0 - 4.0 * (-config.x).exp();

    let mut rows = Vec::new();
    let names = [
        "eventFrequency",
        "eventFrequencyLow",
        "eventFrequencyHigh",
        "target",
        "lambdaStar",
        "lambdaStarLow",
        "lambdaStarHigh",
        "bn",
        "Bn",
        "rho",
        "rhoLow",
        "rhoHigh",
        "nonexact",
    ];
    let mut points: Vec<Vec<SeriesPoint>> = vec![Vec::new(); names.len()];
    for &n in &config.n_grid {
        let draws = par_map(config.lambda_replications, |r| {
            let mut rng = task_rng(config.master_seed, tag ^ LAMBDA_SALT, n as u64, r as u64);
            let sample = dict.sample(n, &mut rng)?;
            let losses = loss_matrix(&dict.finite_model(&sample)?, &sample);
            let deviations = losses.iter().zip(&risks).map(|(l, r)| (mean(l) - r).abs()).collect();
            let envelope = (0..n).map(|i| losses.iter().fold(0.0_f64, |m, l| m.max(l[i]))).collect::<Vec<f64>>();
            Ok((ClassDraw { means: risks.clone(), deviations }, envelope))
        })?;
        let (draws, envelopes): (Vec<ClassDraw>, Vec<Vec<f64>>) = draws.into_iter().unzip();
        let process = LocalizedProcess::from_draws(draws)?;
        let lambda_at = |shift: f64| {
            fixed_point_lambda(
                |l| {
                    let e = process.expected_sup(l);
                    (e.mean + shift * e.stderr).max(0.0)
                },
                eps,
                1.0,
                1e-10,
            )
        };
        let (lambda, lambda_low, lambda_high) = (lambda_at(0.0)?, lambda_at(-2.0)?, lambda_at(2.0)?);
        let bn = envelope_bn(&envelopes, 1e-9)?;

        let psi_size = (20 * n).min(1_000_000);
        let mut rng = task_rng(config.master_seed, tag ^ PSI_SALT, n as u64, 0);
        let pooled = dict.sample(psi_size, &mut rng)?;
        let mut psi1 = 0.0_f64;
        for l in loss_matrix(&dict.finite_model(&pooled)?, &pooled) {
            psi1 = psi1.max(psi_alpha_norm(&l, 1.0, 1e-9)?.value);
        }
        let big_bn = bernstein_from_psi1(psi1, n, c0)?.bn;
        let rho_for = |l: f64| -> Result<f64> {
            Ok(config.rho_scale * rho_n_theorem_a(l, bn, big_bn, eps, config.x, n, c0)?.value)
        };
        let (rho, rho_low, rho_high) = (rho_for(lambda)?, rho_for(lambda_low)?, rho_for(lambda_high)?);

        let reps = par_map(config.replications, |r| {
            let mut rng = task_rng(config.master_seed, tag, n as u64, r as u64);
            let sample = dict.sample(n, &mut rng)?;
            let empirical = dict.finite_model(&sample)?.empirical_risks(&sample, LossSpec::ZeroOne)?;
            let event = |rho: f64| {
                let hit = risks.iter().zip(&empirical).all(|(p, pn)| *p <= (1.0 + 2.0 * eps) * pn + rho);
                if hit {
                    1.0
                } else {
                    0.0
                }
            };
            let chosen = erm_index(&empirical, 0.0)?;
            let report = OracleReport::new(n, risks[chosen], oracle, eps, rho);
            Ok(([event(rho), event(rho_low), event(rho_high)], report))
        })?;
        for (k, name) in names.iter().enumerate() {
            let point = match *name {
                "eventFrequency" | "eventFrequencyLow" | "eventFrequencyHigh" => {
                    let hits: Vec<f64> = reps.iter().map(|(e, _)| e[k]).collect();
                    SeriesPoint::from_values(n, &hits)?
                }
                "target" => SeriesPoint::exact(n, target),
                "lambdaStar" => SeriesPoint::exact(n, lambda),
                "lambdaStarLow" => SeriesPoint::exact(n, lambda_low),
                "lambdaStarHigh" => SeriesPoint::exact(n, lambda_high),
                "bn" => SeriesPoint::exact(n, bn),
                "Bn" => SeriesPoint::exact(n, big_bn),
                "rho" => SeriesPoint::exact(n, rho),
                "rhoLow" => SeriesPoint::exact(n, rho_low),
                "rhoHigh" => SeriesPoint::exact(n, rho_high),
                _ => {
                    let slacks: Vec<f64> = reps.iter().map(|(_, r)| r.slack_nonexact).collect();
                    SeriesPoint::floored(n, &slacks, config.floor)?
                }
            };
            points[k].push(point);
        }
        rows.extend(reps.into_iter().enumerate().map(|(replication, (_, report))| RowRecord {
            scenario: Scenario::Isomorphy,
            replication,
            report,
        }));
    }
    let series = names.iter().zip(points).map(|(name, pts)| Series::new(name, pts)).collect();
    Ok(ScenarioOutput { scenario: Scenario::Isomorphy, rows, series })
}

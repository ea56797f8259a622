use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scenario {
    FiniteGap,
    Isomorphy,
    SquareLasso,
    LqRerm,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::FiniteGap => "FiniteGap",
            Scenario::Isomorphy => "Isomorphy",
            Scenario::SquareLasso => "SquareLasso",
            Scenario::LqRerm => "LqRerm",
        }
    }

    /// Seed-derivation tag. The two linear scenarios share one so that the
    /// `q = 2` path of `LqRerm` reproduces `SquareLasso` exactly.
    pub(crate) fn seed_tag(self) -> u64 {
        match self {
            Scenario::FiniteGap => 1,
            Scenario::Isomorphy => 2,
            Scenario::SquareLasso | Scenario::LqRerm => 3,
        }
    }
}

/// Additive noise `Y - <X, beta*>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum Noise {
    /// `N(0, sd^2)`.
    Gaussian { sd: f64 },
    /// Uniform on `[-range, range]`.
    Bounded { range: f64 },
    /// `Exp(rate) - 1/rate`.
    Exponential { rate: f64 },
}

impl Default for Noise {
    fn default() -> Self {
        Noise::Gaussian { sd: 1.0 }
    }
}

/// `beta*` with its first `support` coordinates equal to `magnitude`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaStarSpec {
    pub support: usize,
    pub magnitude: f64,
}

impl Default for BetaStarSpec {
    fn default() -> Self {
        Self { support: 3, magnitude: 1.0 }
    }
}

impl BetaStarSpec {
    pub fn vector(&self, d: usize) -> Vec<f64> {
        (0..d).map(|j| if j < self.support { self.magnitude } else { 0.0 }).collect()
    }
}

fn default_d() -> usize {
    50
}
fn default_q() -> f64 {
    2.0
}
fn default_epsilon() -> f64 {
    0.25
}
fn default_x() -> f64 {
    2.0
}
fn default_gamma() -> f64 {
    1.0
}
fn default_dictionary_size() -> usize {
    16
}
fn default_label_noise() -> f64 {
    0.2
}
fn default_lambda_replications() -> usize {
    500
}
fn default_floor() -> f64 {
    1e-12
}
fn default_tol() -> f64 {
    1e-7
}
fn default_max_iter() -> usize {
    100_000
}
fn default_scale() -> f64 {
    1.0
}

/// One Monte Carlo experiment. Field names are camelCase in the
/// configuration file; only `scenario`, `nGrid`, `replications` and
/// `masterSeed` are required.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_d")]
    pub d: usize,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_x")]
    pub x: f64,
    pub replications: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub noise: Noise,
    #[serde(default)]
    pub beta_star: BetaStarSpec,
    /// Absolute constants `c0`, `K`, `Kprime`, `K1`; each defaults to 1.
    #[serde(default)]
    pub constants: BTreeMap<String, f64>,
    /// FiniteGap: risk gap `gamma / sqrt(n)` of the two-function model.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Isomorphy: number of threshold classifiers.
    #[serde(default = "default_dictionary_size")]
    pub dictionary_size: usize,
    /// Isomorphy: label flip probability.
    #[serde(default = "default_label_noise")]
    pub label_noise: f64,
    /// Isomorphy: replications used to estimate `lambda*`.
    #[serde(default = "default_lambda_replications")]
    pub lambda_replications: usize,
    /// Isomorphy: multiplier applied to `rho_n` before checking the event.
    #[serde(default = "default_scale")]
    pub rho_scale: f64,
    /// Linear scenarios: test-set size; defaults to `min(20 max nGrid, 10^6)`.
    #[serde(default)]
    pub test_size: Option<usize>,
    /// SquareLasso: fixed `kappa` instead of the canonical penalty.
    #[serde(default)]
    pub kappa: Option<f64>,
    /// Positive floor applied to nonexact slacks before log-log fits.
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

pub const CONSTANT_NAMES: [&str; 4] = ["c0", "K", "Kprime", "K1"];

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let value: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        Self::from_table(value)
    }

    pub fn from_table(table: toml::Table) -> Result<Self> {
        let config: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn constant(&self, name: &str) -> f64 {
        self.constants.get(name).copied().unwrap_or(1.0)
    }

    pub fn test_set_size(&self) -> usize {
        let max_n = self.n_grid.iter().copied().max().unwrap_or(1);
        self.test_size.unwrap_or_else(|| (20 * max_n).min(1_000_000))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, why: String| Err(Error::Config(format!("{field}: {why}")));
        if self.n_grid.is_empty() {
            return bad("nGrid", "must be nonempty".into());
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return bad("nGrid", "must be strictly increasing".into());
        }
        if self.n_grid[0] < 2 {
            return bad("nGrid", "sample sizes must be >= 2".into());
        }
        if self.replications < 1 {
            return bad("replications", "must be >= 1".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad("epsilon", format!("must lie in (0, 1/2), got {}", self.epsilon));
        }
        if !(self.x > 0.0 && self.x.is_finite()) {
            return bad("x", format!("must be > 0, got {}", self.x));
        }
        if !(self.q >= 2.0 && self.q.is_finite()) {
            return bad("q", format!("must be >= 2, got {}", self.q));
        }
        if self.d < 2 {
            return bad("d", format!("must be >= 2, got {}", self.d));
        }
        let noise_ok = match self.noise {
            Noise::Gaussian { sd } => sd >= 0.0 && sd.is_finite(),
            Noise::Bounded { range } => range >= 0.0 && range.is_finite(),
            Noise::Exponential { rate } => rate > 0.0 && rate.is_finite(),
        };
        if !noise_ok {
            return bad("noise", format!("invalid parameter in {:?}", self.noise));
        }
        if self.beta_star.support > self.d || !self.beta_star.magnitude.is_finite() {
            return bad("betaStar", "support must be <= d and magnitude finite".into());
        }
        for (name, value) in &self.constants {
            if !CONSTANT_NAMES.contains(&name.as_str()) {
                return bad("constants", format!("unknown constant {name:?}"));
            }
            if !(value.is_finite() && *value > 0.0) {
                return bad("constants", format!("{name} must be > 0, got {value}"));
            }
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad("gamma", format!("must be > 0, got {}", self.gamma));
        }
        if self.dictionary_size < 1 {
            return bad("dictionarySize", "must be >= 1".into());
        }
        if !(0.0..=0.5).contains(&self.label_noise) {
            return bad("labelNoise", format!("must lie in [0, 1/2], got {}", self.label_noise));
        }
        if self.lambda_replications < 2 {
            return bad("lambdaReplications", "must be >= 2".into());
        }
        if !(self.rho_scale >= 0.0 && self.rho_scale.is_finite()) {
            return bad("rhoScale", format!("must be >= 0, got {}", self.rho_scale));
        }
        if self.test_set_size() < 2 {
            return bad("testSize", "must be >= 2".into());
        }
        if let Some(k) = self.kappa {
            if !(k >= 0.0 && k.is_finite()) {
                return bad("kappa", format!("must be >= 0, got {k}"));
            }
        }
        if !(self.floor > 0.0 && self.floor.is_finite()) {
            return bad("floor", format!("must be > 0, got {}", self.floor));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return bad("tol", format!("must be > 0, got {}", self.tol));
        }
        if self.max_iter < 1 {
            return bad("maxIter", "must be >= 1".into());
        }
        Ok(())
    }
}

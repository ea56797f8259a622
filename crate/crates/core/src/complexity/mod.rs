//! Localized empirical processes over star-shaped hulls, the `lambda*`
//! fixed point, peeling, chaining bounds, and complexity profiles.

mod chaining;
mod profile;

pub use chaining::{covering_number, dudley_gamma2, lq_localized_bound, maurey_l1_gamma2, DEFAULT_DUDLEY_SCALES};
pub(crate) use profile::h_nd;
pub use profile::{theorem_c_profile, ComplexityProfile, MonotoneMap, ProfileConstants};

use rayon::prelude::*;

use crate::error::{ensure, Error, Result};
use crate::model::RiskEstimate;
use crate::seeds::{task_rng, TaskRng};

/// One realization of a finite loss class: population means `P g` and
/// deviations `|(P - P_n) g|`, localized at `level`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizedSupInput {
    means: Vec<f64>,
    deviations: Vec<f64>,
    level: f64,
}

impl LocalizedSupInput {
    pub fn new(means: Vec<f64>, deviations: Vec<f64>, level: f64) -> Result<Self> {
        ensure(!means.is_empty(), || "empty class".into())?;
        ensure(means.len() == deviations.len(), || {
            format!("{} means but {} deviations", means.len(), deviations.len())
        })?;
        ensure(means.iter().all(|m| m.is_finite() && *m >= 0.0), || {
            "class means must be finite and nonnegative".into()
        })?;
        ensure(deviations.iter().all(|v| v.is_finite()), || "non-finite deviation".into())?;
        ensure(level.is_finite() && level >= 0.0, || format!("level must be >= 0, got {level}"))?;
        Ok(Self { means, deviations, level })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn deviations(&self) -> &[f64] {
        &self.deviations
    }

    pub fn level(&self) -> f64 {
        self.level
    }
}

/// `||P - P_n||_G = max_g |P g - P_n g|`.
pub fn sup_deviation(means: &[f64], empirical_means: &[f64]) -> Result<f64> {
    ensure(!means.is_empty(), || "empty class".into())?;
    ensure(means.len() == empirical_means.len(), || "length mismatch".into())?;
    ensure(means.iter().chain(empirical_means).all(|v| v.is_finite()), || "non-finite mean".into())?;
    Ok(means.iter().zip(empirical_means).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
}

fn starhull_sup(means: &[f64], deviations: &[f64], level: f64) -> f64 {
    means
        .iter()
        .zip(deviations)
        .map(|(&m, &dev)| {
            let theta = if m > 0.0 { (level / m).min(1.0) } else { 1.0 };
            theta * dev.abs()
        })
        .fold(0.0, f64::max)
}

/// Supremum of `|(P - P_n) h|` over `h = theta g` in the star hull with
/// `P h <= level`. Exact for finite classes: the objective is linear in
/// `theta`, so the largest admissible `theta = min(1, level / P g)` wins.
pub fn localized_sup_starhull(input: &LocalizedSupInput) -> f64 {
    starhull_sup(&input.means, &input.deviations, input.level)
}

/// A single Monte Carlo draw of the class: what a replication contributes.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassDraw {
    pub means: Vec<f64>,
    pub deviations: Vec<f64>,
}

/// Replications of a loss class drawn once and reused for every level, so
/// `level -> E sup` is a deterministic nondecreasing function.
#[derive(Debug, Clone)]
pub struct LocalizedProcess {
    draws: Vec<ClassDraw>,
}

impl LocalizedProcess {
    pub fn sample<S>(sampler: S, replications: usize, master_seed: u64) -> Result<Self>
    where
        S: Fn(&mut TaskRng) -> Result<ClassDraw> + Sync,
    {
        ensure(replications >= 1, || "replications must be >= 1".into())?;
        let draws = (0..replications)
            .into_par_iter()
            .map(|r| {
                let mut rng = task_rng(master_seed, LOCALIZATION_TAG, 0, r as u64);
                let draw = sampler(&mut rng)?;
                LocalizedSupInput::new(draw.means.clone(), draw.deviations.clone(), 0.0)?;
                Ok(draw)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { draws })
    }

    pub fn from_draws(draws: Vec<ClassDraw>) -> Result<Self> {
        ensure(!draws.is_empty(), || "no draws".into())?;
        Ok(Self { draws })
    }

    pub fn replications(&self) -> usize {
        self.draws.len()
    }

    pub fn expected_sup(&self, level: f64) -> RiskEstimate {
        let values: Vec<f64> = self.draws.iter().map(|d| starhull_sup(&d.means, &d.deviations, level)).collect();
        RiskEstimate::from_values(&values).expect("at least one draw")
    }

    /// Unlocalized `E ||P - P_n||_G`.
    pub fn expected_sup_deviation(&self) -> RiskEstimate {
        self.expected_sup(f64::INFINITY)
    }
}

const LOCALIZATION_TAG: u64 = 0x4c4f_4341_4c49_5a45;

/// Monte Carlo estimate of `E ||P - P_n||` over `V(G)_level`.
pub fn expected_localized_sup<S>(sampler: S, level: f64, replications: usize, master_seed: u64) -> Result<RiskEstimate>
where
    S: Fn(&mut TaskRng) -> Result<ClassDraw> + Sync,
{
    ensure(level.is_finite() && level >= 0.0, || format!("level must be >= 0, got {level}"))?;
    Ok(LocalizedProcess::sample(sampler, replications, master_seed)?.expected_sup(level))
}

const MAX_BRACKET_DOUBLINGS: usize = 60;

/// Smallest `lambda` (to within `tol`) with `phi(lambda) <= (epsilon/4) lambda`.
///
/// `phi(lambda) / lambda` must be nonincreasing, which holds for expected
/// suprema over localized star hulls. The upper bracket is doubled up to 60
/// times before giving up.
pub fn fixed_point_lambda<F>(phi: F, epsilon: f64, bracket_hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    ensure(epsilon > 0.0 && epsilon < 0.5, || format!("epsilon must lie in (0, 1/2), got {epsilon}"))?;
    ensure(tol > 0.0 && tol.is_finite(), || format!("tolerance must be positive, got {tol}"))?;
    ensure(bracket_hi.is_finite() && bracket_hi > 0.0, || "upper bracket must be positive".into())?;
    let holds = |lambda: f64| phi(lambda) <= 0.25 * epsilon * lambda;

    let mut lo = tol;
    if holds(lo) {
        return Ok(lo);
    }
    let mut hi = bracket_hi.max(lo);
    let mut doublings = 0;
    while !holds(hi) {
        if doublings == MAX_BRACKET_DOUBLINGS {
            return Err(Error::Bracket { hi });
        }
        lo = hi;
        hi *= 2.0;
        doublings += 1;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeelingBound {
    pub value: f64,
    /// First shell index `i` with `2^(i+1) lambda >= R*`; `None` when every
    /// shell up to `i_max` is empty.
    pub first_level: Option<usize>,
}

/// `sum_{i <= i_max, 2^(i+1) lambda >= R*} 2^-i bound(2^(i+1) lambda)`.
pub fn peeling_bound<F>(per_level_bound: F, lambda: f64, r_star: f64, i_max: usize) -> Result<PeelingBound>
where
    F: Fn(f64) -> f64,
{
    ensure(lambda > 0.0 && lambda.is_finite(), || format!("lambda must be > 0, got {lambda}"))?;
    ensure(r_star.is_finite(), || "R* must be finite".into())?;
    let mut value = 0.0;
    let mut first_level = None;
    for i in 0..=i_max {
        let mu = 2f64.powi(i as i32 + 1) * lambda;
        if mu < r_star {
            continue;
        }
        first_level.get_or_insert(i);
        let b = per_level_bound(mu);
        ensure(b >= 0.0, || format!("per-level bound must be >= 0, got {b} at level {mu}"))?;
        value += 2f64.powi(-(i as i32)) * b;
    }
    Ok(PeelingBound { value, first_level })
}

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// A nondecreasing map `r -> value` on `r >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MonotoneMap {
    /// `scale * (1 + r)^exponent`.
    ShiftedPower { scale: f64, exponent: f64 },
    /// Piecewise-linear through `(grid[k], values[k])`, constant past the
    /// last grid point.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

impl MonotoneMap {
    pub fn shifted_power(scale: f64, exponent: f64) -> Result<Self> {
        ensure(scale >= 0.0 && exponent >= 0.0, || {
            format!("shifted power needs scale, exponent >= 0 (got {scale}, {exponent})")
        })?;
        Ok(MonotoneMap::ShiftedPower { scale, exponent })
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        ensure(!grid.is_empty() && grid.len() == values.len(), || "table needs matching nonempty columns".into())?;
        ensure(grid[0] >= 0.0, || "table grid must start at r >= 0".into())?;
        ensure(grid.windows(2).all(|w| w[0] < w[1]), || "table grid must be strictly increasing".into())?;
        ensure(values.windows(2).all(|w| w[0] <= w[1]), || "table values must be nondecreasing".into())?;
        ensure(values.iter().chain(&grid).all(|v| v.is_finite()), || "non-finite table entry".into())?;
        Ok(MonotoneMap::Tabulated { grid, values })
    }

    pub fn zero() -> Self {
        MonotoneMap::ShiftedPower { scale: 0.0, exponent: 0.0 }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            MonotoneMap::ShiftedPower { scale, exponent } => scale * (1.0 + r.max(0.0)).powf(*exponent),
            MonotoneMap::Tabulated { grid, values } => {
                if r <= grid[0] {
                    return values[0];
                }
                let k = grid.partition_point(|&g| g <= r);
                if k == grid.len() {
                    return values[k - 1];
                }
                let (g0, g1) = (grid[k - 1], grid[k]);
                let t = (r - g0) / (g1 - g0);
                values[k - 1] + t * (values[k] - values[k - 1])
            }
        }
    }
}

/// The isomorphic profile `r -> lambda*_eps(r)` of the family of l1-balls,
/// together with the Bernstein function `B_n(r)` and the envelope bound
/// `phi_n(r)` at sample size `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityProfile {
    pub lambda_star: MonotoneMap,
    pub bn: MonotoneMap,
    pub phi_n: MonotoneMap,
    pub epsilon: f64,
    pub n: f64,
}

impl ComplexityProfile {
    pub fn new(lambda_star: MonotoneMap, bn: MonotoneMap, phi_n: MonotoneMap, epsilon: f64, n: f64) -> Result<Self> {
        ensure(epsilon > 0.0 && epsilon < 0.5, || format!("epsilon must lie in (0, 1/2), got {epsilon}"))?;
        ensure(n >= 1.0, || format!("n must be >= 1, got {n}"))?;
        Ok(Self { lambda_star, bn, phi_n, epsilon, n })
    }

    /// All three maps identically zero.
    pub fn degenerate(epsilon: f64, n: f64) -> Result<Self> {
        Self::new(MonotoneMap::zero(), MonotoneMap::zero(), MonotoneMap::zero(), epsilon, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileConstants {
    pub c0: f64,
    pub c2: f64,
    pub c3: f64,
}

impl Default for ProfileConstants {
    fn default() -> Self {
        Self { c0: 1.0, c2: 1.0, c3: 1.0 }
    }
}

/// `h(n, d) = K^q (log n)^((4q-2)/q) (log d)^2`.
pub(crate) fn h_nd(n: f64, d: f64, q: f64, kd: f64) -> f64 {
    kd.powf(q) * n.ln().powf((4.0 * q - 2.0) / q) * d.ln().powi(2)
}

/// Closed-form profile of the L_q loss over l1-balls:
/// `lambda*(r) = c2 (1+r)^q h(n,d) / (n eps^2)`,
/// `B_n(r) = c0 (2K)^q (1+r)^q log(en)`,
/// `phi_n(r) = c3 K^q log(n) (1+r)^q`.
pub fn theorem_c_profile(
    n: f64,
    d: f64,
    q: f64,
    kd: f64,
    epsilon: f64,
    c: ProfileConstants,
) -> Result<ComplexityProfile> {
    ensure(n >= 2.0, || format!("n must be >= 2, got {n}"))?;
    ensure(d >= 2.0, || format!("d must be >= 2, got {d}"))?;
    ensure(q >= 2.0, || format!("q must be >= 2, got {q}"))?;
    ensure(kd > 0.0, || format!("K(d) must be > 0, got {kd}"))?;
    ensure(epsilon > 0.0 && epsilon < 0.5, || format!("epsilon must lie in (0, 1/2), got {epsilon}"))?;
    ensure([c.c0, c.c2, c.c3].iter().all(|v| *v >= 0.0), || "constants must be >= 0".into())?;
    let h = h_nd(n, d, q, kd);
    let lambda_star = MonotoneMap::shifted_power(c.c2 * h / (n * epsilon * epsilon), q)?;
    let bn = MonotoneMap::shifted_power(c.c0 * (2.0 * kd).powf(q) * (std::f64::consts::E * n).ln(), q)?;
    let phi_n = MonotoneMap::shifted_power(c.c3 * kd.powf(q) * n.ln(), q)?;
    ComplexityProfile::new(lambda_star, bn, phi_n, epsilon, n)
}

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::complexity::{ComplexityProfile, MonotoneMap};
use crate::error::{ensure, Error, Result};

fn check_epsilon(epsilon: f64) -> Result<()> {
    ensure(epsilon > 0.0 && epsilon < 0.5, || format!("epsilon must lie in (0, 1/2), got {epsilon}"))
}

/// Residual term `rho_n(x)` of the exact-to-nonexact oracle inequality for ERM.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ResidualSpec {
    pub lambda_star: f64,
    pub bn_term: f64,
    #[serde(rename = "BnTerm")]
    pub big_bn_term: f64,
    pub epsilon: f64,
    pub x: f64,
    pub n: usize,
    pub value: f64,
}

/// `max(lambda*, c0 (b_n + B_n / eps) x / (n eps))`.
pub fn rho_n_theorem_a(
    lambda_star: f64,
    bn: f64,
    big_bn: f64,
    epsilon: f64,
    x: f64,
    n: usize,
    c0: f64,
) -> Result<ResidualSpec> {
    check_epsilon(epsilon)?;
    ensure(n >= 1, || "n must be >= 1".into())?;
    ensure([lambda_star, bn, big_bn, x, c0].iter().all(|v| v.is_finite() && *v >= 0.0), || {
        "lambda*, b_n, B_n, x and c0 must be finite and >= 0".into()
    })?;
    let deviation = c0 * (bn + big_bn / epsilon) * x / (n as f64 * epsilon);
    Ok(ResidualSpec { lambda_star, bn_term: bn, big_bn_term: big_bn, epsilon, x, n, value: lambda_star.max(deviation) })
}

/// `max(lambda*(r), c0 (phi_n(r) + B_n(r) / eps) (x + 1) / (n eps))`.
pub fn rho_n_theorem_b(profile: &ComplexityProfile, r: f64, x: f64, c0: f64) -> Result<f64> {
    ensure(r >= 0.0 && r.is_finite(), || format!("r must be >= 0, got {r}"))?;
    ensure(x > 0.0 && x.is_finite(), || format!("x must be > 0, got {x}"))?;
    ensure(c0 >= 0.0, || format!("c0 must be >= 0, got {c0}"))?;
    let eps = profile.epsilon;
    let deviation = c0 * (profile.phi_n.eval(r) + profile.bn.eval(r) / eps) * (x + 1.0) / (profile.n * eps);
    Ok(profile.lambda_star.eval(r).max(deviation))
}

/// `sup { r > 0 : f(r) <= y }` for a nondecreasing `f`, by bisection on
/// `[0, hi]`; 0 when `f(0+) > y`. Fails when `f(hi) <= y`, since the
/// supremum then lies beyond the search range.
pub fn generalized_inverse_fn(f: impl Fn(f64) -> f64, y: f64, hi: f64) -> Result<f64> {
    ensure(hi > 0.0 && hi.is_finite(), || format!("search range must be > 0, got {hi}"))?;
    if f(hi) <= y {
        return Err(Error::InvalidProfile(format!("map stays <= {y} on [0, {hi}]")));
    }
    let (mut lo, mut up) = (0.0_f64, hi);
    if f(f64::MIN_POSITIVE) > y {
        return Ok(0.0);
    }
    while up - lo > 1e-15 * up {
        let mid = 0.5 * (lo + up);
        if mid <= lo || mid >= up {
            break;
        }
        if f(mid) <= y {
            lo = mid;
        } else {
            up = mid;
        }
    }
    Ok(lo)
}

/// `sup { r > 0 : f(r) <= y }` for a nondecreasing map, with 0 when
/// `f(0+) > y`. Exact for both representations; a map that never exceeds
/// `y` is reported as an invalid profile.
pub fn generalized_inverse(map: &MonotoneMap, y: f64) -> Result<f64> {
    ensure(!y.is_nan(), || "cannot invert at NaN".into())?;
    match map {
        MonotoneMap::ShiftedPower { scale, exponent } => {
            if *scale > y {
                return Ok(0.0);
            }
            if *scale == 0.0 || *exponent == 0.0 {
                return Err(Error::InvalidProfile(format!("constant map {scale} never exceeds {y}")));
            }
            Ok(((y / scale).powf(1.0 / exponent) - 1.0).max(0.0))
        }
        MonotoneMap::Tabulated { grid, values } => {
            if values[0] > y {
                return Ok(0.0);
            }
            let k = values.partition_point(|&v| v <= y);
            if k == values.len() {
                return Err(Error::InvalidProfile(format!("tabulated map never exceeds {y}")));
            }
            let (v0, v1) = (values[k - 1], values[k]);
            let (g0, g1) = (grid[k - 1], grid[k]);
            Ok(g0 + (y - v0) / (v1 - v0) * (g1 - g0))
        }
    }
}

/// Radius function `alpha_n(eps, x)`: either a known bound `C_n` on the
/// criterion, or `max(K1 (crit(f0) + 2), (lambda*)^{-1}((1+2eps)(3R(f0) +
/// 2K'(b_n(f0) + B_n(crit f0)))(x+1)/n))`.
#[allow(clippy::too_many_arguments)]
pub fn alpha_n(
    profile: &ComplexityProfile,
    f0_risk: f64,
    f0_crit: f64,
    f0_bn: f64,
    x: f64,
    epsilon: f64,
    k1: f64,
    k_prime: f64,
    bounded_crit_cn: Option<f64>,
) -> Result<f64> {
    if let Some(cn) = bounded_crit_cn {
        ensure(cn.is_finite() && cn >= 0.0, || format!("C_n must be >= 0, got {cn}"))?;
        return Ok(cn);
    }
    check_epsilon(epsilon)?;
    ensure([f0_risk, f0_crit, f0_bn, k1, k_prime].iter().all(|v| v.is_finite() && *v >= 0.0), || {
        "R(f0), crit(f0), b_n(f0), K1 and K' must be finite and >= 0".into()
    })?;
    ensure(x > 0.0, || format!("x must be > 0, got {x}"))?;
    let target =
        (1.0 + 2.0 * epsilon) * (3.0 * f0_risk + 2.0 * k_prime * (f0_bn + profile.bn.eval(f0_crit))) * (x + 1.0)
            / profile.n;
    let unbounded = match &profile.lambda_star {
        MonotoneMap::ShiftedPower { scale, exponent } => *scale > 0.0 && *exponent > 0.0,
        MonotoneMap::Tabulated { values, .. } => values.last() > values.first(),
    };
    if !unbounded {
        return Err(Error::InvalidProfile("lambda* is bounded; supply a bound C_n instead".into()));
    }
    let inverse = generalized_inverse(&profile.lambda_star, target)?;
    Ok((k1 * (f0_crit + 2.0)).max(inverse))
}

/// `2 / (1 + 2 eps) * rho_n(crit + 1, x + log alpha_n)`.
pub fn rerm_regularizer(
    profile: &ComplexityProfile,
    crit: f64,
    x: f64,
    alpha_n: f64,
    epsilon: f64,
    c0: f64,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    ensure(alpha_n >= 1.0, || format!("alpha_n must be >= 1, got {alpha_n}"))?;
    ensure(crit >= 0.0, || format!("crit must be >= 0, got {crit}"))?;
    Ok(2.0 / (1.0 + 2.0 * epsilon) * rho_n_theorem_b(profile, crit + 1.0, x + alpha_n.ln(), c0)?)
}

/// `c0 x V log(en / V) / (eps^2 n)`.
pub fn massart_rate(v: f64, n: f64, x: f64, epsilon: f64, c0: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    ensure(v >= 1.0 && v <= n, || format!("need 1 <= V <= n, got V = {v}, n = {n}"))?;
    ensure(x > 0.0, || format!("x must be > 0, got {x}"))?;
    Ok(c0 * x * v * (E * n / v).ln() / (epsilon * epsilon * n))
}

/// `lambda(n, d, x) = c0 K^q (log n)^((4q-2)/q) (log d)^2 (x + log n)`.
pub fn theorem_c_penalty(n: f64, d: f64, x: f64, q: f64, kd: f64, c0: f64) -> Result<f64> {
    ensure(n >= 2.0, || format!("n must be >= 2, got {n}"))?;
    ensure(d >= 2.0, || format!("d must be >= 2, got {d}"))?;
    ensure(x > 0.0, || format!("x must be > 0, got {x}"))?;
    ensure(q >= 2.0, || format!("q must be >= 2, got {q}"))?;
    ensure(kd > 0.0, || format!("K(d) must be > 0, got {kd}"))?;
    ensure(c0 >= 0.0, || format!("c0 must be >= 0, got {c0}"))?;
    Ok(c0 * crate::complexity::h_nd(n, d, q, kd) * (x + n.ln()))
}

/// Square-LASSO weight `kappa(n, d, x) = lambda(n, d, x) / eps^2` at `q = 2`.
pub fn canonical_kappa(n: f64, d: f64, x: f64, kd: f64, epsilon: f64, c0: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    Ok(theorem_c_penalty(n, d, x, 2.0, kd, c0)? / (epsilon * epsilon))
}

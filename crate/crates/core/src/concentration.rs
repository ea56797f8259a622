//! Orlicz-norm estimation, envelope and weak-variance quantities, Bernstein
//! constants for nonnegative subexponential losses, and the closed-form
//! concentration bounds used to build residual terms.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiNormEstimate {
    pub alpha: f64,
    pub value: f64,
    pub sample_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernsteinCertificate {
    /// `B_n` in `P l^2 <= B_n P l + B_n^2 / n`.
    pub bn: f64,
    /// The additive `B_n^2 / n` term.
    pub residual: f64,
    pub checked: bool,
}

fn exp_moment(abs_pow: &[f64], c: f64, alpha: f64) -> f64 {
    let scale = c.powf(alpha);
    abs_pow.iter().map(|a| (a / scale).exp()).sum::<f64>() / abs_pow.len() as f64
}

/// Empirical `psi_alpha` norm: the smallest `c` with
/// `(1/m) sum exp(|x_i|^alpha / c^alpha) <= 2`.
///
/// The bracket is found by doubling from `max |x_i|` and then bisected down
/// to floating-point resolution, so the returned value is well inside `tol`.
pub fn psi_alpha_norm(samples: &[f64], alpha: f64, tol: f64) -> Result<PsiNormEstimate> {
    ensure(!samples.is_empty(), || "psi norm of an empty sample".into())?;
    ensure(samples.iter().all(|x| x.is_finite()), || "non-finite sample".into())?;
    ensure(alpha.is_finite() && alpha >= 1.0, || format!("alpha must be >= 1, got {alpha}"))?;
    ensure(tol > 0.0, || format!("tolerance must be positive, got {tol}"))?;

    let sample_count = samples.len();
    let max_abs = samples.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max_abs == 0.0 {
        return Ok(PsiNormEstimate { alpha, value: 0.0, sample_count });
    }
    let abs_pow: Vec<f64> = samples.iter().map(|x| x.abs().powf(alpha)).collect();

    let mut hi = max_abs;
    while exp_moment(&abs_pow, hi, alpha) > 2.0 {
        hi *= 2.0;
    }
    // exp(max^a / c^a) / m > 2 once c is small enough; start from a bracket
    // we know fails rather than from zero.
    let mut lo = hi / 2.0;
    while lo > f64::MIN_POSITIVE && exp_moment(&abs_pow, lo, alpha) <= 2.0 {
        hi = lo;
        lo /= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if exp_moment(&abs_pow, mid, alpha) <= 2.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= tol * 1e-9 {
            break;
        }
    }
    Ok(PsiNormEstimate { alpha, value: hi, sample_count })
}

/// `b_n(G)`: psi_1 norm of the per-replication maxima `max_i sup_g |g(Z_i)|`.
///
/// Each inner slice holds the `n` envelope values `sup_g |g(Z_i)|` of one
/// replication.
pub fn envelope_bn(class_values: &[Vec<f64>], tol: f64) -> Result<f64> {
    ensure(!class_values.is_empty(), || "envelope needs at least one replication".into())?;
    let n = class_values[0].len();
    ensure(n >= 1, || "replications must be nonempty".into())?;
    ensure(class_values.iter().all(|r| r.len() == n), || {
        "ragged envelope input: replications differ in length".into()
    })?;
    let maxima: Vec<f64> = class_values.iter().map(|rep| rep.iter().fold(0.0_f64, |m, v| m.max(v.abs()))).collect();
    Ok(psi_alpha_norm(&maxima, 1.0, tol)?.value)
}

/// `sigma(G) = sup_g sqrt(P g^2)`.
pub fn sigma_g(second_moments: &[f64]) -> Result<f64> {
    ensure(!second_moments.is_empty(), || "sigma of an empty class".into())?;
    ensure(second_moments.iter().all(|m| m.is_finite() && *m >= 0.0), || {
        "second moments must be finite and nonnegative".into()
    })?;
    Ok(second_moments.iter().cloned().fold(0.0, f64::max).sqrt())
}

/// Bernstein constant `B_n = c0 * D * log(e n)` for losses with psi_1
/// diameter `D`.
pub fn bernstein_from_psi1(psi1: f64, n: usize, c0: f64) -> Result<BernsteinCertificate> {
    ensure(psi1.is_finite() && psi1 >= 0.0, || format!("psi_1 diameter must be >= 0, got {psi1}"))?;
    ensure(n >= 1, || "n must be >= 1".into())?;
    ensure(c0 > 0.0, || format!("c0 must be positive, got {c0}"))?;
    let bn = c0 * psi1 * (std::f64::consts::E * n as f64).ln();
    Ok(BernsteinCertificate { bn, residual: bn * bn / n as f64, checked: false })
}

/// Checks `E X^2 <= log(ez) |X|_psi1 E X + (4 + 6 log^2(ez) |X|_psi1^2) / (ez)`
/// with empirical moments in place of expectations.
pub fn bernstein_verify(samples: &[f64], psi1: f64, z: f64) -> Result<bool> {
    ensure(!samples.is_empty(), || "no samples".into())?;
    ensure(samples.iter().all(|x| x.is_finite() && *x >= 0.0), || "samples must be finite and nonnegative".into())?;
    ensure(psi1.is_finite() && psi1 >= 0.0, || format!("psi1 must be >= 0, got {psi1}"))?;
    ensure(z.is_finite() && z >= 1.0, || format!("z must be >= 1, got {z}"))?;
    let m = samples.len() as f64;
    let first = samples.iter().sum::<f64>() / m;
    let second = samples.iter().map(|x| x * x).sum::<f64>() / m;
    let ez = std::f64::consts::E * z;
    let log_ez = ez.ln();
    let rhs = log_ez * psi1 * first + (4.0 + 6.0 * log_ez * log_ez * psi1 * psi1) / ez;
    Ok(second <= rhs)
}

impl BernsteinCertificate {
    /// Marks the certificate checked when every supplied nonnegative loss
    /// sample satisfies `P l^2 <= B_n P l + B_n^2 / n` empirically.
    pub fn verify_on(mut self, losses: &[Vec<f64>]) -> Result<Self> {
        let mut ok = true;
        for l in losses {
            ensure(!l.is_empty() && l.iter().all(|v| v.is_finite() && *v >= 0.0), || {
                "losses must be nonempty, finite and nonnegative".into()
            })?;
            let m = l.len() as f64;
            let first = l.iter().sum::<f64>() / m;
            let second = l.iter().map(|v| v * v).sum::<f64>() / m;
            ok &= second <= self.bn * first + self.residual;
        }
        self.checked = ok;
        Ok(self)
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    ensure(v.is_finite() && v >= 0.0, || format!("{name} must be finite and >= 0, got {v}"))
}

/// Deviation bound for the supremum of an empirical process:
/// `(1+alpha) E sup + K sigma sqrt(x/n) + K (1 + 1/alpha) b_n x / n`.
pub fn adamczak_bound(exp_sup: f64, sigma: f64, bn: f64, n: usize, x: f64, alpha: f64, k: f64) -> Result<f64> {
    for (name, v) in [("expSup", exp_sup), ("sigma", sigma), ("bn", bn), ("x", x), ("K", k)] {
        check_nonneg(name, v)?;
    }
    ensure(n >= 1, || "n must be >= 1".into())?;
    ensure(alpha > 0.0 && alpha.is_finite(), || format!("alpha must be > 0, got {alpha}"))?;
    let nf = n as f64;
    Ok((1.0 + alpha) * exp_sup + k * sigma * (x / nf).sqrt() + k * (1.0 + 1.0 / alpha) * bn * x / nf)
}

/// Single-function upper deviation under a Bernstein condition:
/// `(1+2 alpha) P g + K' (1 + 1/alpha) (b_n(g) + B_n) (x+1)/n`.
#[allow(clippy::too_many_arguments)]
pub fn single_fn_bound(pg: f64, bn_g: f64, big_bn: f64, n: usize, x: f64, alpha: f64, k_prime: f64) -> Result<f64> {
    for (name, v) in [("Pg", pg), ("bn_g", bn_g), ("Bn", big_bn), ("x", x), ("K'", k_prime)] {
        check_nonneg(name, v)?;
    }
    ensure(n >= 1, || "n must be >= 1".into())?;
    ensure(alpha > 0.0 && alpha < 1.0, || format!("alpha must lie in (0, 1), got {alpha}"))?;
    let nf = n as f64;
    Ok((1.0 + 2.0 * alpha) * pg + k_prime * (1.0 + 1.0 / alpha) * (bn_g + big_bn) * (x + 1.0) / nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{E, LN_2};

    #[test]
    fn psi_norm_examples() {
        assert_eq!(psi_alpha_norm(&[0.0, 0.0], 1.0, 1e-9).unwrap().value, 0.0);
        let ones = psi_alpha_norm(&[1.0; 5], 1.0, 1e-9).unwrap();
        assert!((ones.value - 1.0 / LN_2).abs() < 1e-9);
        assert_eq!(ones.sample_count, 5);
        let data = [0.3, -1.2, 2.5, 0.0, 0.7];
        let base = psi_alpha_norm(&data, 1.0, 1e-9).unwrap().value;
        let scaled: Vec<f64> = data.iter().map(|x| 3.0 * x).collect();
        let s = psi_alpha_norm(&scaled, 1.0, 1e-9).unwrap().value;
        assert!((s - 3.0 * base).abs() < 2e-9);
    }

    #[test]
    fn psi_norm_constant_alpha_two() {
        // exp(1/c^2) = 2  =>  c = 1/sqrt(ln 2)
        let v = psi_alpha_norm(&[1.0, -1.0], 2.0, 1e-12).unwrap().value;
        assert!((v - 1.0 / LN_2.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn psi_norm_errors() {
        assert!(psi_alpha_norm(&[], 1.0, 1e-6).is_err());
        assert!(psi_alpha_norm(&[f64::NAN], 1.0, 1e-6).is_err());
        assert!(psi_alpha_norm(&[1.0], 0.5, 1e-6).is_err());
    }

    #[test]
    fn envelope_examples() {
        assert_eq!(envelope_bn(&[vec![0.0; 3], vec![0.0; 3]], 1e-9).unwrap(), 0.0);
        let v = envelope_bn(&[vec![1.0, 1.0, 1.0]], 1e-9).unwrap();
        assert!((v - 1.0 / LN_2).abs() < 1e-9);
        let bounded = vec![vec![0.2, -0.9, 0.5], vec![0.1, 0.4, 0.3], vec![-0.6, 0.0, 0.8]];
        assert!(envelope_bn(&bounded, 1e-9).unwrap() <= 0.9 / LN_2 + 1e-9);
        assert!(envelope_bn(&[vec![1.0, 2.0], vec![1.0]], 1e-9).is_err());
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_g(&[0.0]).unwrap(), 0.0);
        assert_eq!(sigma_g(&[4.0, 9.0]).unwrap(), 3.0);
        assert_eq!(sigma_g(&[2.25]).unwrap(), 1.5);
        assert!(sigma_g(&[]).is_err());
    }

    #[test]
    fn bernstein_constant_examples() {
        assert_eq!(bernstein_from_psi1(0.0, 10, 1.0).unwrap().bn, 0.0);
        let unit = bernstein_from_psi1(1.0, 1, 1.0).unwrap();
        assert!((unit.bn - 1.0).abs() < 1e-15);
        assert!(!unit.checked);
        let a = bernstein_from_psi1(1.3, 40, 1.0).unwrap().bn;
        let b = bernstein_from_psi1(2.6, 40, 1.0).unwrap().bn;
        assert!((b - 2.0 * a).abs() < 1e-12);
        assert!(bernstein_from_psi1(-1.0, 1, 1.0).is_err());
    }

    #[test]
    fn bernstein_verify_examples() {
        assert!(bernstein_verify(&[0.0; 4], 0.0, 1.0).unwrap());
        // 1 <= 2 (1/ln2) + (4 + 24/ln2^2)/e^2
        assert!(bernstein_verify(&[1.0; 3], 1.0 / LN_2, E).unwrap());
        assert!(bernstein_verify(&[-1.0], 1.0, 1.0).is_err());
    }

    #[test]
    fn certificate_verification_on_bounded_losses() {
        let losses = vec![vec![0.0, 1.0, 1.0, 0.0], vec![0.5, 0.25, 0.0, 1.0]];
        let cert = bernstein_from_psi1(1.0, 4, 1.0).unwrap().verify_on(&losses).unwrap();
        assert!(cert.checked);
    }

    #[test]
    fn adamczak_examples() {
        assert_eq!(adamczak_bound(0.0, 0.0, 0.0, 1, 0.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(adamczak_bound(1.0, 0.0, 0.0, 1, 0.0, 0.5, 0.0).unwrap(), 1.5);
        assert_eq!(adamczak_bound(0.0, 1.0, 0.0, 4, 1.0, 1.0, 1.0).unwrap(), 0.5);
    }

    #[test]
    fn single_fn_examples() {
        assert_eq!(single_fn_bound(1.0, 0.0, 0.0, 1, 0.0, 0.25, 0.0).unwrap(), 1.5);
        // K'(1 + 4) * 2 * (1 + 1) / 2 = 10 K'
        let v = single_fn_bound(0.0, 1.5, 0.5, 2, 1.0, 0.25, 1.0).unwrap();
        assert!((v - 10.0).abs() < 1e-12);
        let v = single_fn_bound(0.8, 1.0, 1.0, 3, 2.0, 0.3, 0.0).unwrap();
        assert!((v - 1.6 * 0.8).abs() < 1e-15);
        assert!(single_fn_bound(1.0, 0.0, 0.0, 1, 0.0, 1.0, 1.0).is_err());
        assert!(single_fn_bound(1.0, 0.0, 0.0, 1, 0.0, 0.0, 1.0).is_err());
    }
}

use ndarray::{Array1, Array2};
use proptest::prelude::*;

use oraclebench::complexity::{
    covering_number, dudley_gamma2, fixed_point_lambda, localized_sup_starhull, peeling_bound, sup_deviation,
    theorem_c_profile, LocalizedSupInput, ProfileConstants,
};
use oraclebench::concentration::{adamczak_bound, bernstein_verify, psi_alpha_norm, single_fn_bound};
use oraclebench::harness::OracleReport;
use oraclebench::model::{empirical_risk, empirical_risk_linear, erm_index, l1_norm, LossSpec, Sample};
use oraclebench::solvers::{
    massart_rate, project_l1_ball, rho_n_theorem_a, rho_n_theorem_b, solve_lq_rerm, solve_square_lasso,
    theorem_c_penalty,
};

fn vector(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, len)
}

fn points() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..4).prop_flat_map(|dim| prop::collection::vec(prop::collection::vec(-3.0..3.0f64, dim), 1..12))
}

fn sample(n: usize, d: usize) -> impl Strategy<Value = Sample> {
    (prop::collection::vec(-2.0..2.0f64, n * d), prop::collection::vec(-3.0..3.0f64, n))
        .prop_map(move |(x, y)| Sample::new(Array2::from_shape_vec((n, d), x).unwrap(), Array1::from(y)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projection_is_feasible_and_idempotent(v in vector(1..30), r in 0.0..20.0f64) {
        let p = project_l1_ball(&v, r).unwrap();
        prop_assert!(l1_norm(&p) <= r + 1e-10);
        let again = project_l1_ball(&p, r).unwrap();
        for (a, b) in p.iter().zip(&again) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + r));
        }
    }

    #[test]
    fn empirical_risk_is_permutation_invariant(mut losses in prop::collection::vec(0.0..5.0f64, 1..40), seed in any::<u64>()) {
        let before = empirical_risk(&losses).unwrap();
        let k = losses.len();
        losses.rotate_left((seed % k as u64) as usize);
        losses.reverse();
        prop_assert!((empirical_risk(&losses).unwrap() - before).abs() <= 1e-12 * (1.0 + before));
    }

    #[test]
    fn erm_ignores_appended_worse_functions(risks in prop::collection::vec(0.0..1.0f64, 1..20), extra in prop::collection::vec(0.0..1.0f64, 0..5)) {
        let best = erm_index(&risks, 0.0).unwrap();
        let max = risks.iter().cloned().fold(f64::MIN, f64::max);
        let mut longer = risks.clone();
        longer.extend(extra.iter().map(|e| max + 0.1 + e));
        prop_assert_eq!(erm_index(&longer, 0.0).unwrap(), best);
    }

    #[test]
    fn erm_is_invariant_under_increasing_relabeling(risks in prop::collection::vec(0.0..1.0f64, 1..20), shift in 0.0..1.0f64, scale in 0.1..10.0f64) {
        let relabeled: Vec<f64> = risks.iter().map(|r| shift + scale * r.powi(3)).collect();
        prop_assert_eq!(erm_index(&relabeled, 0.0).unwrap(), erm_index(&risks, 0.0).unwrap());
    }

    #[test]
    fn lq_risk_scales_with_power(s in sample(6, 2), beta in vector(2..3), c in 0.0..3.0f64, q in 2.0..4.0f64) {
        let loss = LossSpec::lq(q).unwrap();
        let base = empirical_risk_linear(&beta, &s, loss).unwrap();
        let scaled = Sample::new(s.design().clone(), s.response() * c).unwrap();
        let scaled_beta: Vec<f64> = beta.iter().map(|b| b * c).collect();
        let r = empirical_risk_linear(&scaled_beta, &scaled, loss).unwrap();
        prop_assert!((r - c.powf(q) * base).abs() <= 1e-9 * (1.0 + r));
    }

    #[test]
    fn psi_norm_is_homogeneous_and_monotone(v in prop::collection::vec(-5.0..5.0f64, 1..50), c in 0.1..10.0f64, bump in 0.0..2.0f64) {
        let tol = 1e-9;
        let base = psi_alpha_norm(&v, 1.0, tol).unwrap().value;
        let scaled: Vec<f64> = v.iter().map(|x| c * x).collect();
        let s = psi_alpha_norm(&scaled, 1.0, tol).unwrap().value;
        prop_assert!((s - c * base).abs() <= 2.0 * tol * c.max(1.0) * (1.0 + base));
        let larger: Vec<f64> = v.iter().map(|x| x.abs() + bump).collect();
        prop_assert!(psi_alpha_norm(&larger, 1.0, tol).unwrap().value >= base - 2.0 * tol);
    }

    #[test]
    fn bernstein_holds_for_nonnegative_data(v in prop::collection::vec(0.0..20.0f64, 2..200), inflate in 1.0..3.0f64) {
        let psi1 = psi_alpha_norm(&v, 1.0, 1e-10).unwrap().value;
        prop_assert!(bernstein_verify(&v, psi1 * inflate, v.len() as f64).unwrap());
    }

    #[test]
    fn concentration_bounds_are_affine_in_constant(a in 0.0..5.0f64, b in 0.0..5.0f64, c in 0.0..5.0f64, k in 0.1..4.0f64) {
        let adamczak = |k: f64| adamczak_bound(a, b, c, 100, 2.0, 1.0, k).unwrap();
        let affine = adamczak(0.0) + k * (adamczak(1.0) - adamczak(0.0));
        prop_assert!((adamczak(k) - affine).abs() <= 1e-12 * (1.0 + affine));
        let single = |k: f64| single_fn_bound(a, b, c, 100, 2.0, 0.5, k).unwrap();
        let affine = single(0.0) + k * (single(1.0) - single(0.0));
        prop_assert!((single(k) - affine).abs() <= 1e-12 * (1.0 + affine));
        let at = |a: f64, b: f64, c: f64| adamczak_bound(a, b, c, 100, 2.0, 1.0, 1.0).unwrap();
        prop_assert!(at(a + 1.0, b, c) >= at(a, b, c));
        prop_assert!(at(a, b + 1.0, c) >= at(a, b, c));
        prop_assert!(at(a, b, c + 1.0) >= at(a, b, c));
    }

    #[test]
    fn starhull_is_monotone_and_saturates(means in prop::collection::vec(0.0..3.0f64, 1..20), seed in prop::collection::vec(-2.0..2.0f64, 20), l1 in 0.0..4.0f64, l2 in 0.0..4.0f64) {
        let devs = seed[..means.len()].to_vec();
        let (lo, hi) = if l1 <= l2 { (l1, l2) } else { (l2, l1) };
        let at = |level| localized_sup_starhull(&LocalizedSupInput::new(means.clone(), devs.clone(), level).unwrap());
        prop_assert!(at(lo) <= at(hi));
        let top = means.iter().cloned().fold(0.0, f64::max);
        let empirical: Vec<f64> = means.iter().zip(&devs).map(|(m, d)| m + d).collect();
        prop_assert!((at(top) - sup_deviation(&means, &empirical).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn fixed_point_is_tight(scale in 0.01..10.0f64, eps in 0.01..0.49f64) {
        let tol = 1e-9;
        let phi = |l: f64| scale * l.sqrt();
        let l = fixed_point_lambda(phi, eps, 1.0, tol).unwrap();
        prop_assert!(phi(l) <= eps / 4.0 * l);
        if l - tol > tol {
            prop_assert!(phi(l - tol) > eps / 4.0 * (l - tol));
        }
    }

    #[test]
    fn peeling_is_monotone(slope in 0.0..2.0f64, offset in 0.0..2.0f64, bump in 0.0..1.0f64, i_max in 1usize..7) {
        let per = |t: f64| offset + slope * t.sqrt();
        let bumped = |t: f64| offset + bump + slope * t.sqrt();
        let a = peeling_bound(per, 0.5, 0.1, i_max).unwrap().value;
        prop_assert!(peeling_bound(bumped, 0.5, 0.1, i_max).unwrap().value >= a);
        prop_assert!(peeling_bound(per, 0.5, 0.1, i_max + 1).unwrap().value >= a);
    }

    // Greedy covers are not monotone under inclusion. A point inside the
    // bounding box keeps the diameter, and the greedy count of the larger
    // set at radius r dominates that of the smaller set at 2r, which gives
    // the factor 1/2.
    #[test]
    fn dudley_grows_with_points(pts in points(), weights in prop::collection::vec(0.0..1.0f64, 3)) {
        let dim = pts[0].len();
        let extra: Vec<f64> = (0..dim)
            .map(|i| {
                let lo = pts.iter().map(|p| p[i]).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p[i]).fold(f64::NEG_INFINITY, f64::max);
                lo + weights[i] * (hi - lo)
            })
            .collect();
        let before = dudley_gamma2(&pts, 20).unwrap();
        let mut more = pts.clone();
        more.push(extra);
        prop_assert!(dudley_gamma2(&more, 20).unwrap() >= 0.5 * before - 1e-12);
        let mut doubled = pts.clone();
        doubled.push(pts[pts.len() - 1].clone());
        prop_assert!((dudley_gamma2(&doubled, 20).unwrap() - before).abs() <= 1e-12 * (1.0 + before));
    }

    #[test]
    fn covering_number_decreases_in_radius(pts in points(), r1 in 0.01..5.0f64, r2 in 0.01..5.0f64) {
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        prop_assert!(covering_number(&pts, hi).unwrap() <= covering_number(&pts, lo).unwrap());
    }

    #[test]
    fn profile_is_monotone_and_homogeneous(n in 3.0..1e4f64, d in 2.0..100.0f64, q in 2.0..4.0f64, kd in 0.1..3.0f64, r1 in 0.0..5.0f64, r2 in 0.0..5.0f64) {
        let c = ProfileConstants::default();
        let p = theorem_c_profile(n, d, q, kd, 0.25, c).unwrap();
        let p2 = theorem_c_profile(n, d, q, 2.0 * kd, 0.25, c).unwrap();
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        for (a, b) in [(&p.lambda_star, &p2.lambda_star), (&p.bn, &p2.bn), (&p.phi_n, &p2.phi_n)] {
            prop_assert!(a.eval(lo) <= a.eval(hi));
            prop_assert!((b.eval(r1) - 2f64.powf(q) * a.eval(r1)).abs() <= 1e-9 * b.eval(r1));
        }
        prop_assert!(rho_n_theorem_b(&p, lo, 2.0, 1.0).unwrap() <= rho_n_theorem_b(&p, hi, 2.0, 1.0).unwrap());
        prop_assert!(rho_n_theorem_b(&p, lo, 2.0, 1.0).unwrap() <= rho_n_theorem_b(&p, lo, 3.0, 1.0).unwrap());
    }

    #[test]
    fn penalties_are_monotone_and_linear(n in 3.0..1e5f64, d in 2.0..1e3f64, x in 0.01..10.0f64, q in 2.0..4.0f64, kd in 0.1..3.0f64, c0 in 0.1..5.0f64) {
        let base = theorem_c_penalty(n, d, x, q, kd, 1.0).unwrap();
        prop_assert!((theorem_c_penalty(n, d, x, q, kd, c0).unwrap() - c0 * base).abs() <= 1e-12 * c0 * base);
        prop_assert!(theorem_c_penalty(n * 1.5, d, x, q, kd, 1.0).unwrap() >= base);
        prop_assert!(theorem_c_penalty(n, d * 1.5, x, q, kd, 1.0).unwrap() >= base);
        prop_assert!(theorem_c_penalty(n, d, x + 1.0, q, kd, 1.0).unwrap() > base);
        prop_assert!(theorem_c_penalty(n, d, x, q, kd * 1.5, 1.0).unwrap() >= base);

        let rho = |x: f64, c0: f64| rho_n_theorem_a(0.1, 1.0, 2.0, 0.25, x, 100, c0).unwrap().value;
        prop_assert!(rho(x + 1.0, 1.0) >= rho(x, 1.0));
        let v = (n / 3.0).max(1.0);
        let m = massart_rate(v, n, x, 0.25, 1.0).unwrap();
        prop_assert!((massart_rate(v, n, x, 0.25, c0).unwrap() - c0 * m).abs() <= 1e-12 * c0 * m);
        prop_assert!(massart_rate(v, n, 2.0 * x, 0.25, 1.0).unwrap() >= m);
    }

    #[test]
    fn report_is_consistent(achieved in 0.0..10.0f64, oracle in 0.0..10.0f64, eps in 0.01..0.49f64, budget in 0.0..5.0f64) {
        let r = OracleReport::new(50, achieved, oracle, eps, budget);
        prop_assert!((r.slack_exact - r.slack_nonexact - 3.0 * eps * oracle).abs() <= 1e-12 * (1.0 + oracle));
        prop_assert_eq!(r.satisfied, r.slack_nonexact <= r.residual_budget);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn square_lasso_norm_decreases_with_kappa(s in sample(12, 3), k1 in 0.0..10.0f64, k2 in 0.0..10.0f64) {
        let tol = 1e-9;
        let (lo, hi) = if k1 <= k2 { (k1, k2) } else { (k2, k1) };
        let a = solve_square_lasso(&s, lo, tol, 100_000).unwrap();
        let b = solve_square_lasso(&s, hi, tol, 100_000).unwrap();
        // both solutions are unique when kappa > 0, up to the certified gap
        prop_assert!(l1_norm(&b.beta) <= l1_norm(&a.beta) + 1e-4);
    }

    #[test]
    fn rerm_beats_zero_and_certifies(s in sample(10, 3), q in 2.0..4.0f64, lambda in 0.0..2.0f64) {
        let tol = 1e-8;
        let sol = solve_lq_rerm(&s, q, lambda, tol, 100_000).unwrap();
        let zero = empirical_risk_linear(&[0.0; 3], &s, LossSpec::lq(q).unwrap()).unwrap();
        prop_assert!(sol.objective <= zero + 1e-12 * (1.0 + zero));
        prop_assert!(sol.optimality_gap <= tol);
    }
}

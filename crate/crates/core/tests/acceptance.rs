//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use oraclebench::complexity::{fixed_point_lambda, localized_sup_starhull, LocalizedSupInput};
use oraclebench::concentration::{bernstein_verify, psi_alpha_norm};
use oraclebench::harness::{run_scenario, write_rows_csv, Scenario, ScenarioConfig, ScenarioOutput};
use oraclebench::model::{l1_norm, Sample};
use oraclebench::solvers::{project_l1_ball, solve_lasso, solve_square_lasso};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

type Criterion = fn() -> (Outcome, u64);

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn criterion_1() -> (Outcome, u64) {
    let ones = vec![1.0; 1000];
    let v = psi_alpha_norm(&ones, 1.0, 1e-12).unwrap().value;
    let expect = 1.0 / std::f64::consts::LN_2;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let data: Vec<f64> = (0..500).map(|_| Exp::new(1.0).unwrap().sample(&mut rng)).collect();
    let tripled: Vec<f64> = data.iter().map(|x| 3.0 * x).collect();
    let base = psi_alpha_norm(&data, 1.0, 1e-12).unwrap().value;
    let scaled = psi_alpha_norm(&tripled, 1.0, 1e-12).unwrap().value;
    let (e1, e2) = ((v - expect).abs(), (scaled - 3.0 * base).abs());
    (check(e1 <= 1e-6 && e2 <= 2e-6, format!("|psi1 - 1/ln2| = {e1:.2e}, homogeneity error {e2:.2e}")), 1)
}

fn criterion_2() -> (Outcome, u64) {
    const GRID: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let m = rng.random_range(1..=20);
        let level = rng.random_range(0.05..2.0);
        let mut means = Vec::with_capacity(m);
        for _ in 0..m {
            // admissible scalings end on a grid point or at 1
            means.push(match rng.random_range(0..4) {
                0 => 0.0,
                1 => rng.random_range(0.0..level),
                _ => level * GRID as f64 / rng.random_range(1..GRID) as f64,
            });
        }
        let devs: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let fast = localized_sup_starhull(&LocalizedSupInput::new(means.clone(), devs.clone(), level).unwrap());
        let mut brute = 0.0_f64;
        for (mean, dev) in means.iter().zip(&devs) {
            for k in 0..=GRID {
                let theta = k as f64 / GRID as f64;
                if theta * mean <= level * (1.0 + 1e-12) {
                    brute = brute.max(theta * dev.abs());
                }
            }
        }
        worst = worst.max((fast - brute).abs());
    }
    (check(worst <= 1e-10, format!("max |closed form - grid| = {worst:.2e} over 100 classes")), 10)
}

fn criterion_3() -> (Outcome, u64) {
    let a = fixed_point_lambda(f64::sqrt, 0.4, 1.0, 1e-9).unwrap();
    let b = fixed_point_lambda(|_| 1.0, 0.4, 1.0, 1e-9).unwrap();
    let pass = (a - 100.0).abs() <= 1e-6 && (b - 10.0).abs() <= 1e-6;
    (check(pass, format!("sqrt -> {a:.9}, const -> {b:.9}")), 1)
}

fn objective_grid(f: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    const STEPS: usize = 400;
    let h = 6.0 / (STEPS - 1) as f64;
    let at = |i: usize| -3.0 + i as f64 * h;
    let mut best = (f64::INFINITY, 0, 0);
    for i in 0..STEPS {
        for j in 0..STEPS {
            let v = f(at(i), at(j));
            if v < best.0 {
                best = (v, i, j);
            }
        }
    }
    let (v, i, j) = best;
    // objective variation across one grid cell around the minimizer
    let mut spread = 0.0_f64;
    for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1), (-1, -1), (1, 1), (-1, 1), (1, -1)] {
        let (a, b) = (at(i).max(-3.0) + di as f64 * h, at(j) + dj as f64 * h);
        spread = spread.max((f(a, b) - v).abs());
    }
    (v, spread)
}

fn michelot(v: &[f64], r: f64) -> Vec<f64> {
    if l1_norm(v) <= r {
        return v.to_vec();
    }
    let mut active: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    loop {
        let theta = (active.iter().sum::<f64>() - r) / active.len() as f64;
        let kept: Vec<f64> = active.iter().copied().filter(|&a| a > theta).collect();
        if kept.len() == active.len() {
            return v.iter().map(|x| x.signum() * (x.abs() - theta).max(0.0)).collect();
        }
        active = kept;
    }
}

fn criterion_4() -> (Outcome, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let tol = 1e-9;
    let mut worst_sq = f64::NEG_INFINITY;
    let mut worst_lasso = f64::NEG_INFINITY;
    for _ in 0..50 {
        let n = 20;
        let beta: [f64; 2] = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
        let x = Array2::from_shape_fn((n, 2), |_| StandardNormal.sample(&mut rng));
        let y = Array1::from_shape_fn(n, |i| {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[[i, 0]] * beta[0] + x[[i, 1]] * beta[1] + 0.5 * z
        });
        let sample = Sample::new(x.clone(), y.clone()).unwrap();
        let risk =
            |b0: f64, b1: f64| (0..n).map(|i| (y[i] - x[[i, 0]] * b0 - x[[i, 1]] * b1).powi(2)).sum::<f64>() / n as f64;
        let kappa = rng.random_range(0.0..20.0);
        let sq = solve_square_lasso(&sample, kappa, tol, 100_000).unwrap();
        let (grid, spread) = objective_grid(|a, b| risk(a, b) + kappa * (a.abs() + b.abs()).powi(2) / n as f64);
        worst_sq = worst_sq.max((sq.objective - grid).abs() - (tol + spread));

        let lambda1 = rng.random_range(0.0..1.0);
        let lb = solve_lasso(&sample, lambda1, tol, 100_000).unwrap();
        let lasso_obj = risk(lb[0], lb[1]) + lambda1 * l1_norm(&lb);
        let (grid, spread) = objective_grid(|a, b| risk(a, b) + lambda1 * (a.abs() + b.abs()));
        worst_lasso = worst_lasso.max((lasso_obj - grid).abs() - (tol + spread));
    }
    let mut worst_proj = 0.0_f64;
    for _ in 0..1000 {
        let d = rng.random_range(1..40);
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-5.0..5.0)).collect();
        let r = rng.random_range(0.0..10.0);
        let a = project_l1_ball(&v, r).unwrap();
        let b = michelot(&v, r);
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        worst_proj = worst_proj.max(diff);
    }
    let pass = worst_sq <= 0.0 && worst_lasso <= 0.0 && worst_proj <= 1e-12;
    (
        check(
            pass,
            format!(
                "excess over tol+grid: square-LASSO {worst_sq:.2e}, LASSO {worst_lasso:.2e}; projection max diff {worst_proj:.2e}"
            ),
        ),
        30,
    )
}

fn config(text: &str) -> ScenarioConfig {
    ScenarioConfig::from_toml_str(text).expect("valid acceptance config")
}

fn fit_line(out: &ScenarioOutput, name: &str) -> (f64, f64) {
    let fit = out.fit(name).expect("fitted series");
    (fit.slope, fit.r_squared)
}

fn criterion_5() -> (Outcome, u64) {
    let cfg = config(
        r#"
        scenario = "FiniteGap"
        nGrid = [128, 256, 512, 1024, 2048, 4096, 8192]
        replications = 500
        masterSeed = 20240501
        "#,
    );
    let out = run_scenario(&cfg, None).unwrap();
    let (ns, nr) = fit_line(&out, "nonexact");
    let (es, er) = fit_line(&out, "exact");
    let pass = ns <= -0.85 && nr >= 0.85 && (-0.65..=-0.35).contains(&es) && er >= 0.85;
    (check(pass, format!("nonexact slope {ns:.3} (R2 {nr:.3}), exact slope {es:.3} (R2 {er:.3})")), 120)
}

fn criterion_6() -> (Outcome, u64) {
    let cfg = config(
        r#"
        scenario = "Isomorphy"
        nGrid = [100, 400, 1600]
        x = 2.0
        replications = 2000
        masterSeed = 20240502
        "#,
    );
    let out = run_scenario(&cfg, None).unwrap();
    let target = 1.0 - 4.0 * (-2.0f64).exp() - 0.02;
    let freqs: Vec<f64> = out.series("eventFrequency").unwrap().points.iter().map(|p| p.mean).collect();
    let min = freqs.iter().cloned().fold(f64::INFINITY, f64::min);
    (check(min >= target, format!("event frequencies {freqs:?} vs threshold {target:.4}")), 120)
}

fn criterion_7() -> (Outcome, u64) {
    let cfg = config(
        r#"
        scenario = "SquareLasso"
        nGrid = [256, 512, 1024, 2048, 4096]
        d = 50
        replications = 200
        masterSeed = 20240503
        noise = { family = "Gaussian", sd = 1.0 }
        betaStar = { support = 3, magnitude = 1.0 }
        "#,
    );
    let out = run_scenario(&cfg, None).unwrap();
    let (slope, r2) = fit_line(&out, "nonexact");
    let freq = out.satisfaction_frequency();
    let pass = slope <= -0.8 && r2 >= 0.9 && freq >= 0.9;
    (check(pass, format!("nonexact slope {slope:.3} (R2 {r2:.3}), satisfaction {freq:.3}")), 300)
}

fn criterion_8() -> (Outcome, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut failures = 0;
    for k in 0..1000 {
        let n = rng.random_range(20..2000);
        let data: Vec<f64> = (0..n)
            .map(|_| match k % 3 {
                0 => Exp::new(rng.random_range(0.2..5.0)).unwrap().sample(&mut rng),
                1 => {
                    let hi = rng.random_range(0.1..10.0);
                    rng.random_range(0.0..hi)
                }
                _ => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z.abs() * rng.random_range(0.1..3.0)
                }
            })
            .collect();
        let psi1 = psi_alpha_norm(&data, 1.0, 1e-9).unwrap().value;
        if !bernstein_verify(&data, psi1, n as f64).unwrap() {
            failures += 1;
        }
    }
    (check(failures == 0, format!("{failures} of 1000 datasets violate the inequality")), 10)
}

fn rows_bytes(cfg: &ScenarioConfig, workers: usize) -> Vec<u8> {
    let out = run_scenario(cfg, Some(workers)).unwrap();
    let mut buf = Vec::new();
    write_rows_csv(&mut buf, &out.rows).unwrap();
    buf
}

fn criterion_9() -> (Outcome, u64) {
    let configs = [
        (Scenario::FiniteGap, "nGrid = [64, 128, 256]\nreplications = 40"),
        (Scenario::Isomorphy, "nGrid = [50, 100]\nreplications = 40\nlambdaReplications = 40"),
        (Scenario::SquareLasso, "nGrid = [40, 80]\nd = 8\nreplications = 6\ntestSize = 2000"),
        (
            Scenario::LqRerm,
            "nGrid = [40, 80]\nd = 6\nq = 4.0\nreplications = 4\ntestSize = 2000\nnoise = { family = \"Bounded\", range = 0.5 }",
        ),
    ];
    let mut details = Vec::new();
    let mut pass = true;
    for (scenario, body) in configs {
        let cfg = config(&format!("scenario = \"{}\"\nmasterSeed = 99\n{body}", scenario.name()));
        let runs = [rows_bytes(&cfg, 1), rows_bytes(&cfg, 1), rows_bytes(&cfg, 8), rows_bytes(&cfg, 8)];
        let same = runs.iter().all(|r| *r == runs[0]);
        pass &= same;
        details.push(format!("{}={}", scenario.name(), if same { "identical" } else { "DIFFERENT" }));
    }
    (check(pass, details.join(", ")), 600)
}

fn main() {
    let criteria: [(&str, Criterion); 9] = [
        ("1 psi1 closed form", criterion_1),
        ("2 localization oracle equivalence", criterion_2),
        ("3 fixed-point algebra", criterion_3),
        ("4 solver oracle equivalence", criterion_4),
        ("5 rate-gap reproduction", criterion_5),
        ("6 isomorphy frequency", criterion_6),
        ("7 desk-scale square-LASSO rate", criterion_7),
        ("8 Bernstein moment universality", criterion_8),
        ("9 determinism", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (outcome, limit) = run();
        let elapsed = start.elapsed();
        let timely = within(elapsed, limit);
        let pass = outcome.pass && timely;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {name}: {} ({}; {:.1}s of {limit}s)",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

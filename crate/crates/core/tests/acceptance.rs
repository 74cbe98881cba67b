//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::LN_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use softpen::diagnostics::{empirical_lipschitz, gaussian_pairs, gaussian_points, gradient_error};
use softpen::driver::{
    delta_validity_window, solve_constrained, theorem_violation_bound, value_gap_bounds,
    SolveOptions, SolverChoice,
};
use softpen::solvers::{
    apg_solve, catalyst_solve, prox_svrg_solve, MomentumMode, SolverConfig, SolverReport,
};
use softpen::zoo::{
    entrywise_quadratic_root, make_entrywise_linear, make_entrywise_quadratic, make_inverse_kkt,
    smooth_max_constraint, ZooInstance,
};
use softpen::{
    penalty_smoothness_bound, Affine, ConstrainedProblem, Constraint, Norm, PenalizedOracle,
    PenaltyConfig, ProximalTerm, Quadratic, SlaterPoint, SmoothComponent,
};

mod common;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn oracle(z: &ZooInstance, xi: f64, delta: f64) -> PenalizedOracle {
    PenalizedOracle::new(z.problem.clone(), PenaltyConfig::new(xi, delta).unwrap())
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    if t < limit {
        Ok(())
    } else {
        Err(format!("runtime {t:.2?} exceeds {limit:?}"))
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn example_1() -> Outcome {
    let start = Instant::now();
    let (n, m, xi, delta) = (10, 10, 1.5, 0.01);
    let z = make_entrywise_linear(n, m, Some(xi)).map_err(|e| e.to_string())?;
    let o = oracle(&z, xi, delta);
    let config = SolverConfig::new(1e-10, MomentumMode::GeneralConvex);
    let rep = apg_solve(&o, &vec![0.0; n], &config).map_err(|e| e.to_string())?;
    let x = &rep.final_point;
    let expected = delta * 0.5f64.ln();
    let coord_err = x.iter().fold(0.0_f64, |a, v| a.max((v - expected).abs()));
    ensure!(coord_err <= 1e-6, "coordinate error {coord_err:e}");
    let l1 = z.problem.violation_norm(x, Norm::L1).unwrap();
    let l1_target = 10.0 * 0.01 * LN_2;
    ensure!(
        (l1 - l1_target).abs() <= 1e-6,
        "‖Ā‖₁ = {l1}, expected {l1_target}"
    );
    let gap = z.problem.eval_objective(x).unwrap() - z.reference.f_star;
    ensure!(
        (gap + l1_target).abs() <= 1e-6,
        "F-gap = {gap}, expected {}",
        -l1_target
    );
    within_time(start, Duration::from_secs(5))?;
    Ok(format!(
        "coord err {coord_err:.1e}, ‖Ā‖₁ = {l1:.6}, F-gap = {gap:.6}, {} iterations",
        rep.iterations_used
    ))
}

fn example_2() -> Outcome {
    let start = Instant::now();
    let (n, m, xi, mu) = (10, 10, 1.5, 1.0);
    let z = make_entrywise_quadratic(n, m).map_err(|e| e.to_string())?;
    let u = 2.0 * m as f64;
    let window = delta_validity_window(m, u, xi, mu, 0.0).unwrap();
    let mut worst = 0.0_f64;
    for delta in [1e-1, 1e-2, 1e-3, 1e-4] {
        let o = oracle(&z, xi, delta);
        let config = SolverConfig::new(1e-20, MomentumMode::StronglyConvex { mu });
        let rep = apg_solve(&o, &vec![0.0; n], &config).map_err(|e| e.to_string())?;
        let t = entrywise_quadratic_root(xi, delta).unwrap();
        let expected: Vec<f64> = (0..n).map(|i| if i < m { t } else { -1.0 }).collect();
        let err = max_abs_diff(&rep.final_point, &expected);
        ensure!(
            err <= 1e-8,
            "delta = {delta}: coordinate error {err:e} ({:?})",
            rep.termination
        );
        worst = worst.max(err);
        let l2 = z
            .problem
            .violation_norm(&rep.final_point, Norm::L2)
            .unwrap();
        let l2_oracle = (m as f64).sqrt() * t.abs();
        ensure!(
            (l2 - l2_oracle).abs() <= 1e-8 * (m as f64).sqrt(),
            "delta = {delta}: ‖Ā‖₂ = {l2} vs {l2_oracle}"
        );
        if delta <= window {
            let bound = theorem_violation_bound(m, delta, u, xi, mu, 0.0).unwrap();
            ensure!(
                l2 <= bound,
                "delta = {delta}: ‖Ā‖₂ = {l2} exceeds bound {bound}"
            );
        }
    }
    within_time(start, Duration::from_secs(30))?;
    Ok(format!("worst coordinate error {worst:.1e}"))
}

fn bound_sweep() -> Outcome {
    let start = Instant::now();
    let n = 10;
    let mu = 1.0;
    let mut cells = 0;
    let mut theorem_violations = 0;
    let mut sandwich_violations = 0;
    let mut max_ratio = 0.0_f64;
    for seed in 0..20u64 {
        for m in [2usize, 5, 10] {
            let z = make_inverse_kkt(seed, n, m, mu, m.div_ceil(2)).map_err(|e| e.to_string())?;
            let xi = 1.5 * z.xi_bar();
            let u = z.growth_aggregate();
            let c1 = z.problem.max_growth_c1();
            let l_a = z
                .problem
                .constraints()
                .iter()
                .fold(0.0_f64, |a, c| a.max(c.smoothness));
            let window = delta_validity_window(m, u, xi, mu, c1).unwrap();
            for k in 0..5 {
                let delta = window * 10f64.powi(-k);
                let o = oracle(&z, xi, delta);
                let x0 = vec![0.0; n];
                let target = 1e-12 * (1.0 + z.problem.eval_objective(&x0).unwrap().abs());
                let config = SolverConfig::new(target, MomentumMode::StronglyConvex { mu });
                let rep = apg_solve(&o, &x0, &config).map_err(|e| e.to_string())?;
                ensure!(
                    rep.is_certified(),
                    "seed {seed}, m {m}, delta {delta:e}: not certified"
                );
                let gap = rep.certified_gap.unwrap();
                let x = &rep.final_point;
                // distance to the penalized optimum and the resulting constraint drift
                let d = (2.0 * gap / mu).sqrt();
                let g = z
                    .problem
                    .constraints()
                    .iter()
                    .map(|c| c.gradient(x).iter().map(|v| v * v).sum::<f64>().sqrt())
                    .fold(0.0_f64, f64::max);
                let drift = (m as f64).sqrt() * (g * d + 0.5 * l_a * d * d);
                let slack = 1e-7 + gap;
                let l2 = z.problem.violation_norm(x, Norm::L2).unwrap();
                let bound = theorem_violation_bound(m, delta, u, xi, mu, c1).unwrap();
                if l2 > bound + slack + drift {
                    theorem_violations += 1;
                }
                if l2 > 0.0 {
                    max_ratio = max_ratio.max(l2 / bound);
                }
                let l1 = z.problem.violation_norm(x, Norm::L1).unwrap();
                let (lo, hi) = value_gap_bounds(xi, m, delta, l1);
                let f_gap = z.problem.eval_objective(x).unwrap() - z.reference.f_star;
                if f_gap < lo - slack || f_gap > hi + slack {
                    sandwich_violations += 1;
                }
                cells += 1;
            }
        }
    }
    ensure!(
        theorem_violations == 0,
        "{theorem_violations} theorem violations in {cells} cells"
    );
    ensure!(
        sandwich_violations == 0,
        "{sandwich_violations} sandwich violations in {cells} cells"
    );
    within_time(start, Duration::from_secs(300))?;
    Ok(format!(
        "{cells} cells, 0 violations, max measured/bound = {max_ratio:.3}"
    ))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn delta_scaling() -> Outcome {
    let (n, m, xi, mu) = (10, 10, 1.5, 1.0);
    let z = make_entrywise_quadratic(n, m).map_err(|e| e.to_string())?;
    let mut log_d = Vec::new();
    let mut log_v = Vec::new();
    for k in 0..=8 {
        let delta = 1e-4 * 10f64.powf(k as f64 * 0.25);
        let o = oracle(&z, xi, delta);
        let rep = apg_solve(
            &o,
            &vec![0.0; n],
            &SolverConfig::new(1e-14, MomentumMode::StronglyConvex { mu }),
        )
        .map_err(|e| e.to_string())?;
        ensure!(rep.is_certified(), "delta = {delta:e}: not certified");
        let v = z
            .problem
            .violation_norm(&rep.final_point, Norm::L2)
            .unwrap();
        log_d.push(delta.ln());
        log_v.push(v.ln());
    }
    let s = slope(&log_d, &log_v);
    ensure!((0.9..=1.1).contains(&s), "slope {s}");
    Ok(format!("slope {s:.4} over δ ∈ [1e-4, 1e-2]"))
}

fn smoothed_max_problem(delta_prime: f64) -> ConstrainedProblem {
    let pieces = vec![
        Constraint::new(Arc::new(Affine::new(vec![1.0, 0.0], 1.0)), 0.0, 1.0, 0.0).unwrap(),
        Constraint::new(Arc::new(Affine::new(vec![0.0, 1.0], 1.0)), 0.0, 1.0, 0.0).unwrap(),
        Constraint::new(Arc::new(Affine::new(vec![1.0, 1.0], 1.5)), 0.0, 2.0, 0.0).unwrap(),
    ];
    let smoothed = smooth_max_constraint(pieces, delta_prime, 2f64.sqrt())
        .unwrap()
        .into_constraint()
        .unwrap();
    let objective = Quadratic::centered(
        nalgebra::DMatrix::identity(2, 2),
        &nalgebra::DVector::from_vec(vec![2.0, 2.0]),
        &nalgebra::DVector::zeros(2),
        0.0,
    )
    .unwrap();
    ConstrainedProblem::new(
        2,
        vec![SmoothComponent::new(Arc::new(objective), 1.0).unwrap()],
        ProximalTerm::Zero,
        vec![smoothed],
        1.0,
        Some(SlaterPoint {
            point: vec![0.0, 0.0],
            margin: 0.9,
        }),
    )
    .unwrap()
}

fn audit_instances() -> Vec<(String, ConstrainedProblem, Vec<f64>, f64)> {
    let mut out = Vec::new();
    let z = make_entrywise_linear(6, 4, None).unwrap();
    out.push((
        "example 1".to_string(),
        z.problem.clone(),
        z.reference.x_star.clone(),
        1.5,
    ));
    let z = make_entrywise_quadratic(6, 4).unwrap();
    out.push((
        "example 2".to_string(),
        z.problem.clone(),
        z.reference.x_star.clone(),
        1.5,
    ));
    for seed in 0..3 {
        let z = make_inverse_kkt(seed, 6, 4, 1.0, 2).unwrap();
        out.push((
            format!("inverse-kkt seed {seed}"),
            z.problem.clone(),
            z.reference.x_star.clone(),
            1.5 * z.xi_bar(),
        ));
    }
    out.push((
        "smoothed max".to_string(),
        smoothed_max_problem(0.05),
        vec![0.75, 0.75],
        2.5,
    ));
    out
}

fn smoothness_audit() -> Outcome {
    let mut worst = 0.0_f64;
    for (name, problem, center, xi) in audit_instances() {
        for delta in [1e-1, 1e-3] {
            let config = PenaltyConfig::new(xi, delta).unwrap();
            let bound = penalty_smoothness_bound(&problem, &config).unwrap();
            let o = PenalizedOracle::new(problem.clone(), config);
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut pairs = gaussian_pairs(&mut rng, &center, 1.0, 5_000);
            pairs.extend(gaussian_pairs(&mut rng, &center, 10.0 * delta, 5_000));
            let ratio = empirical_lipschitz(|x| o.penalized_gradient(x).unwrap(), &pairs);
            ensure!(
                ratio <= bound,
                "{name}, δ = {delta}: empirical {ratio} > bound {bound}"
            );
            worst = worst.max(ratio / bound);
        }
    }
    Ok(format!("max empirical/bound = {worst:.3}"))
}

fn gradient_audit() -> Outcome {
    let mut worst = 0.0_f64;
    for (name, problem, center, xi) in audit_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let points = gaussian_points(&mut rng, &center, 1.0, 100);
        for x in &points {
            for c in problem.components() {
                let f = &c.function;
                worst = worst.max(gradient_error(|y| f.value(y), |y| f.gradient(y), x));
            }
            for c in problem.constraints() {
                let f = &c.function;
                worst = worst.max(gradient_error(|y| f.value(y), |y| f.gradient(y), x));
            }
            for delta in [1e-1, 1e-2, 1e-3] {
                let o =
                    PenalizedOracle::new(problem.clone(), PenaltyConfig::new(xi, delta).unwrap());
                let e = gradient_error(
                    |y| o.smooth_part_value(y),
                    |y| o.penalized_gradient(y).unwrap(),
                    x,
                );
                ensure!(e <= 1e-5, "{name}, δ = {delta}: relative error {e:e}");
                worst = worst.max(e);
            }
        }
        ensure!(worst <= 1e-5, "{name}: relative error {worst:e}");
    }
    Ok(format!("worst relative error {worst:.1e}"))
}

fn cross_solver() -> Outcome {
    let (n, m, xi, delta, mu) = (10, 10, 1.5, 1e-2, 1.0);
    let z = make_entrywise_quadratic(n, m).map_err(|e| e.to_string())?;
    let o = oracle(&z, xi, delta);
    let config = SolverConfig::new(1e-8, MomentumMode::StronglyConvex { mu }).with_seed(3);
    let x0 = vec![0.0; n];
    let reports: Vec<SolverReport> = vec![
        apg_solve(&o, &x0, &config).map_err(|e| e.to_string())?,
        prox_svrg_solve(&o, &x0, &config).map_err(|e| e.to_string())?,
        catalyst_solve(&o, &x0, &config).map_err(|e| e.to_string())?,
    ];
    let values: Vec<f64> = reports
        .iter()
        .map(|r| o.penalized_value(&r.final_point).unwrap())
        .collect();
    for r in &reports {
        ensure!(r.is_certified(), "{} not certified", r.solver);
    }
    let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - values.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure!(spread <= 1e-6, "objective spread {spread:e}");
    Ok(format!("objective spread {spread:.1e}"))
}

fn end_to_end() -> Outcome {
    let (n, m, mu, eps) = (10, 6, 1.0, 0.05);
    let mut worst_a = 0.0_f64;
    for seed in 0..10u64 {
        let z = make_inverse_kkt(seed, n, m, mu, 3).map_err(|e| e.to_string())?;
        let xi = 1.5 * z.xi_bar();
        let mut opts = SolveOptions::new(xi, eps, Norm::L2, SolverChoice::Apg);
        opts.seed = seed;
        let c =
            solve_constrained(&z.problem, Some(&z.reference), &opts).map_err(|e| e.to_string())?;
        ensure!(c.certified, "seed {seed}: not certified");
        ensure!(
            c.eps_a_measured <= eps,
            "seed {seed}: ε_A = {}",
            c.eps_a_measured
        );
        let eps_f = c.eps_f_measured.unwrap();
        let limit = (m as f64).sqrt() * xi * eps;
        ensure!(eps_f <= limit, "seed {seed}: ε_F = {eps_f} > {limit}");
        worst_a = worst_a.max(c.eps_a_measured);
    }
    Ok(format!("10/10 seeds, max ε_A = {worst_a:.2e}"))
}

fn complexity_trend() -> Outcome {
    let z = make_inverse_kkt(0, 10, 6, 1.0, 3).map_err(|e| e.to_string())?;
    let xi = 1.5 * z.xi_bar();
    let mut iterations = Vec::new();
    for k in 0..4 {
        let eps = 0.1 / 2f64.powi(k);
        let opts = SolveOptions::new(xi, eps, Norm::L2, SolverChoice::Apg);
        let c =
            solve_constrained(&z.problem, Some(&z.reference), &opts).map_err(|e| e.to_string())?;
        iterations.push(c.solver_report.iterations_used as f64);
    }
    let worst_factor = iterations
        .windows(2)
        .map(|w| w[1] / w[0])
        .fold(0.0_f64, f64::max);
    ensure!(worst_factor <= 2.5, "APG iterations {iterations:?}");

    let mut svrg = Vec::new();
    let mut cat = Vec::new();
    let mut kappas = Vec::new();
    for condition in [1e3, 4e3] {
        let problem = common::ill_conditioned_least_squares(5, 20, condition);
        let mu = problem.mu();
        let o = PenalizedOracle::new(problem, PenaltyConfig::new(1.0, 0.1).unwrap());
        kappas.push(o.smoothness_bound() / mu);
        let config = SolverConfig::new(1e-8, MomentumMode::StronglyConvex { mu }).with_seed(1);
        let x0 = vec![0.0; 20];
        let s = prox_svrg_solve(&o, &x0, &config).map_err(|e| e.to_string())?;
        let c = catalyst_solve(&o, &x0, &config).map_err(|e| e.to_string())?;
        ensure!(
            s.is_certified() && c.is_certified(),
            "condition {condition}: solver not certified"
        );
        svrg.push(s.oracle_calls.component_gradients as f64);
        cat.push(c.oracle_calls.component_gradients as f64);
    }
    ensure!(kappas[0] >= 1e4, "κ = {} below 1e4", kappas[0]);
    let svrg_growth = svrg[1] / svrg[0];
    let cat_growth = cat[1] / cat[0];
    ensure!(
        cat_growth < svrg_growth,
        "catalyst growth {cat_growth:.2} not below SVRG growth {svrg_growth:.2}"
    );
    Ok(format!(
        "APG factors ≤ {worst_factor:.2}; κ {:.1e} → {:.1e}: SVRG grads ×{svrg_growth:.2}, catalyst grads ×{cat_growth:.2}",
        kappas[0], kappas[1]
    ))
}

fn nonsmooth_wrapper() -> Outcome {
    let delta_prime = 0.05;
    let eps = 0.05;
    let problem = smoothed_max_problem(delta_prime);
    // the projection of (2, 2) onto the region is (0.75, 0.75) with multiplier 1.25
    let opts = SolveOptions::new(1.5 * 1.25, eps, Norm::L2, SolverChoice::Apg);
    let c = solve_constrained(&problem, None, &opts).map_err(|e| e.to_string())?;
    ensure!(c.certified, "not certified");
    let x = &c.point;
    let true_max = (x[0] - 1.0).max(x[1] - 1.0).max(x[0] + x[1] - 1.5);
    let violation = true_max.max(0.0);
    let limit = eps + delta_prime * 3f64.ln();
    ensure!(
        violation > 0.0,
        "expected a slightly infeasible penalized solution"
    );
    ensure!(violation <= limit, "true violation {violation} > {limit}");
    Ok(format!("true violation {violation:.2e} ≤ {limit:.4}"))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("Example-1 reproduction", example_1),
        ("Example-2 reproduction", example_2),
        ("bound-verification sweep", bound_sweep),
        ("δ-scaling law", delta_scaling),
        ("smoothness-constant audit", smoothness_audit),
        ("gradient audit", gradient_audit),
        ("cross-solver agreement", cross_solver),
        ("end-to-end contract", end_to_end),
        ("complexity trend", complexity_trend),
        ("non-smooth wrapper", nonsmooth_wrapper),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.2}s): {detail}", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.2}s): {detail}", i + 1);
            }
        }
    }
    if failures > 0 {
        println!("{failures} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
    println!("all {} criteria passed", criteria.len());
}

//! `softpen sweep-delta`: high-accuracy penalized solves over a δ grid.

use std::path::Path;

use softpen::driver::{delta_validity_window, theorem_violation_bound};
use softpen::{ConstrainedProblem, Norm, PenalizedOracle, PenaltyConfig};

use super::{
    cell, check_delta_grid, emit, fitted_slope, high_accuracy_solve, load_spec, parallel_map,
};
use crate::error::{CliError, CliResult};

struct Row {
    delta: f64,
    in_window: bool,
    certified: bool,
    l1: f64,
    l2: f64,
    f_gap: Option<f64>,
    bound: Option<f64>,
}

/// `2 C1_max ‖A(x)‖∞ + 2 m C0_max` at the given point.
fn growth_aggregate(problem: &ConstrainedProblem, x: &[f64]) -> CliResult<f64> {
    let a_inf = problem
        .eval_constraints(x)?
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(2.0 * problem.max_growth_c1() * a_inf
        + 2.0 * problem.num_constraints() as f64 * problem.max_growth_c0())
}

pub fn run(spec_path: &Path, xi: f64, delta_grid: &[f64], out: Option<&Path>) -> CliResult<()> {
    check_delta_grid(delta_grid)?;
    let (spec, problem) = load_spec(spec_path)?;
    let mu = problem.mu();
    if !(mu > 0.0) {
        return Err(CliError::Schedule(
            "sweep-delta needs a strongly convex problem (mu > 0)".into(),
        ));
    }
    let m = problem.num_constraints();
    let u_point = match (&spec.reference, problem.slater_point()) {
        (Some(r), _) => r.x_star.clone(),
        (None, Some(s)) => {
            eprintln!("warning: no reference solution; U estimated at the Slater point");
            s.point.clone()
        }
        (None, None) => {
            eprintln!("warning: no reference solution or Slater point; U estimated at the origin");
            vec![0.0; problem.dimension()]
        }
    };
    let u = growth_aggregate(&problem, &u_point)?;
    let c1 = problem.max_growth_c1();
    let window = delta_validity_window(m, u, xi, mu, c1)?;
    let x0 = vec![0.0; problem.dimension()];

    let rows = parallel_map(delta_grid, |&delta| {
        let oracle = PenalizedOracle::new(problem.clone(), PenaltyConfig::new(xi, delta)?);
        let report = high_accuracy_solve(&oracle, &x0)?;
        let x = &report.final_point;
        let in_window = delta <= window;
        Ok(Row {
            delta,
            in_window,
            certified: report.is_certified(),
            l1: problem.violation_norm(x, Norm::L1)?,
            l2: problem.violation_norm(x, Norm::L2)?,
            f_gap: match &spec.reference {
                Some(r) => Some(problem.eval_objective(x)? - r.f_star),
                None => None,
            },
            bound: in_window
                .then(|| theorem_violation_bound(m, delta, u, xi, mu, c1))
                .transpose()?,
        })
    })?;

    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.l2 > 0.0)
        .map(|r| (r.delta.ln(), r.l2.ln()))
        .unzip();
    let slope = fitted_slope(&xs, &ys);

    let csv_error = |e: csv::Error| CliError::Runtime(e.to_string());
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "delta",
            "violation_l1",
            "violation_l2",
            "f_gap",
            "theorem_bound",
            "in_window",
            "certified",
        ])
        .map_err(csv_error)?;
    for r in &rows {
        writer
            .write_record([
                format!("{:e}", r.delta),
                format!("{:e}", r.l1),
                format!("{:e}", r.l2),
                cell(r.f_gap),
                cell(r.bound),
                r.in_window.to_string(),
                r.certified.to_string(),
            ])
            .map_err(csv_error)?;
    }
    let mut bytes = writer
        .into_inner()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    bytes.extend_from_slice(
        format!(
            "# slope,{}\n",
            slope.map(|s| s.to_string()).unwrap_or_default()
        )
        .as_bytes(),
    );
    emit(out, &bytes)?;
    if rows.iter().all(|r| r.certified) {
        Ok(())
    } else {
        Err(CliError::NonConvergence(
            "some grid points were not certified".into(),
        ))
    }
}

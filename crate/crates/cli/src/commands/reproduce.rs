//! `softpen reproduce-example`: solver output on the tight examples against their exact optima.

use softpen::driver::{delta_validity_window, prop3_l1_bound, theorem_violation_bound};
use softpen::zoo::{make_entrywise_linear, make_entrywise_quadratic, ZooInstance};
use softpen::{Norm, PenalizedOracle, PenaltyConfig};

use super::{cell, check_delta_grid, emit, high_accuracy_solve, parallel_map};
use crate::error::{CliError, CliResult};

/// Largest coordinate error against the oracle for a row to pass.
pub const COORDINATE_TOLERANCE: f64 = 1e-6;

struct Row {
    delta: f64,
    measured: f64,
    oracle: f64,
    bound: Option<f64>,
    measured_gap: f64,
    oracle_gap: f64,
    coordinate_error: f64,
    certified: bool,
}

impl Row {
    fn passed(&self) -> bool {
        self.certified
            && self.coordinate_error <= COORDINATE_TOLERANCE
            && self.bound.is_none_or(|b| self.measured <= b)
    }
}

fn solve_row(z: &ZooInstance, example: u8, xi: f64, delta: f64) -> CliResult<Row> {
    let problem = &z.problem;
    let m = problem.num_constraints();
    let exact = z
        .exact_penalized_oracle
        .as_ref()
        .expect("tight examples carry an exact oracle")
        .solve(xi, delta)?;
    let oracle = PenalizedOracle::new(problem.clone(), PenaltyConfig::new(xi, delta)?);
    let x0 = vec![0.0; problem.dimension()];
    let report = high_accuracy_solve(&oracle, &x0)?;
    let x = &report.final_point;
    let q = if example == 1 { Norm::L1 } else { Norm::L2 };
    let bound = if example == 1 {
        let gap = (oracle.penalized_value(x)? - oracle.penalized_value(&exact)?).max(0.0);
        Some(prop3_l1_bound(xi, z.xi_bar(), m, delta, gap)?)
    } else {
        let u = 2.0 * m as f64;
        let window = delta_validity_window(m, u, xi, 1.0, 0.0)?;
        (delta <= window)
            .then(|| theorem_violation_bound(m, delta, u, xi, 1.0, 0.0))
            .transpose()?
    };
    let coordinate_error = x
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(Row {
        delta,
        measured: problem.violation_norm(x, q)?,
        oracle: problem.violation_norm(&exact, q)?,
        bound,
        measured_gap: problem.eval_objective(x)? - z.reference.f_star,
        oracle_gap: problem.eval_objective(&exact)? - z.reference.f_star,
        coordinate_error,
        certified: report.is_certified(),
    })
}

pub fn run(example: u8, m: usize, n: usize, xi: f64, delta_grid: &[f64]) -> CliResult<()> {
    check_delta_grid(delta_grid)?;
    let z = match example {
        1 => make_entrywise_linear(n, m, Some(xi))?,
        _ => make_entrywise_quadratic(n, m)?,
    };
    // Rejects ξ outside the example's interval before any solve.
    z.exact_penalized_oracle
        .as_ref()
        .expect("exact oracle")
        .solve(xi, delta_grid[0])?;
    let rows = parallel_map(delta_grid, |&delta| solve_row(&z, example, xi, delta))?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_error = |e: csv::Error| CliError::Runtime(e.to_string());
    writer
        .write_record([
            "delta",
            "measured_violation",
            "oracle_violation",
            "bound",
            "ratio",
            "measured_gap",
            "oracle_gap",
            "coordinate_error",
            "status",
        ])
        .map_err(csv_error)?;
    for r in &rows {
        let ratio = r.bound.filter(|_| r.measured > 0.0).map(|b| b / r.measured);
        writer
            .write_record([
                format!("{:e}", r.delta),
                format!("{:e}", r.measured),
                format!("{:e}", r.oracle),
                cell(r.bound),
                cell(ratio),
                format!("{:e}", r.measured_gap),
                format!("{:e}", r.oracle_gap),
                format!("{:e}", r.coordinate_error),
                if r.passed() { "PASS" } else { "FAIL" }.to_string(),
            ])
            .map_err(csv_error)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    emit(None, &bytes)?;
    let failed = rows.iter().filter(|r| !r.passed()).count();
    if failed == 0 {
        eprintln!("PASS");
        Ok(())
    } else {
        eprintln!("FAIL");
        Err(CliError::Verification(format!(
            "{failed} of {} rows failed",
            rows.len()
        )))
    }
}

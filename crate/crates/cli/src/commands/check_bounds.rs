//! `softpen check-bounds`: violation bound and value sandwich on inverse-KKT instances.

use serde::Serialize;
use softpen::driver::{delta_validity_window, theorem_violation_bound, value_gap_bounds};
use softpen::zoo::make_inverse_kkt;
use softpen::{Norm, PenalizedOracle, PenaltyConfig};

use super::{check_delta_grid, emit, high_accuracy_solve, parallel_map};
use crate::error::{CliError, CliResult};

/// Absolute slack added to every comparison on top of the certified solver gap.
pub const SLACK: f64 = 1e-7;

pub struct Args {
    pub seeds: Vec<u64>,
    pub m_grid: Vec<usize>,
    pub delta_grid: Option<Vec<f64>>,
    pub delta_count: usize,
    pub n: usize,
    pub mu: f64,
    pub xi_factor: f64,
}

#[derive(Debug, Serialize)]
pub struct CellResult {
    pub seed: u64,
    pub m: usize,
    pub delta: f64,
    pub xi: f64,
    pub validity_window: f64,
    pub in_window: bool,
    pub certified_gap: Option<f64>,
    pub violation_l2: Option<f64>,
    pub theorem_bound: Option<f64>,
    /// `‖Ā‖₂ / bound`.
    pub tightness: Option<f64>,
    pub f_gap: Option<f64>,
    pub sandwich_lower: Option<f64>,
    pub sandwich_upper: Option<f64>,
    pub theorem_ok: Option<bool>,
    pub sandwich_ok: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub median: f64,
    pub p90: f64,
    pub max: f64,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub cells: usize,
    pub checked: usize,
    pub outside_window: usize,
    pub uncertified: usize,
    pub theorem_violations: usize,
    pub sandwich_violations: usize,
    pub tightness: Option<Quantiles>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub family: &'static str,
    pub n: usize,
    pub mu: f64,
    pub xi_factor: f64,
    pub slack: f64,
    pub cells: Vec<CellResult>,
    pub summary: Summary,
    pub verdict: &'static str,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * p).round() as usize;
    sorted[idx]
}

fn check_cell(
    args: &Args,
    seed: u64,
    m: usize,
    delta: Option<f64>,
    k: usize,
) -> CliResult<CellResult> {
    let z = make_inverse_kkt(seed, args.n, m, args.mu, m.div_ceil(2).min(args.n))?;
    let problem = &z.problem;
    let xi = args.xi_factor * z.xi_bar();
    let u = z.growth_aggregate();
    let c1 = problem.max_growth_c1();
    let window = delta_validity_window(m, u, xi, args.mu, c1)?;
    let delta = delta.unwrap_or(window * 10f64.powi(-(k as i32)));
    let mut cell = CellResult {
        seed,
        m,
        delta,
        xi,
        validity_window: window,
        in_window: delta <= window,
        certified_gap: None,
        violation_l2: None,
        theorem_bound: None,
        tightness: None,
        f_gap: None,
        sandwich_lower: None,
        sandwich_upper: None,
        theorem_ok: None,
        sandwich_ok: None,
    };
    if !cell.in_window {
        return Ok(cell);
    }
    let oracle = PenalizedOracle::new(problem.clone(), PenaltyConfig::new(xi, delta)?);
    let report = high_accuracy_solve(&oracle, &vec![0.0; args.n])?;
    if !report.is_certified() {
        return Ok(cell);
    }
    let gap = report.certified_gap.unwrap_or(0.0);
    let x = &report.final_point;
    // Certified distance to the penalized optimum and the constraint drift it allows.
    let d = (2.0 * gap / args.mu).sqrt();
    let l_a = problem
        .constraints()
        .iter()
        .fold(0.0_f64, |a, c| a.max(c.smoothness));
    let g = problem
        .constraints()
        .iter()
        .map(|c| c.gradient(x).iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0_f64, f64::max);
    let drift = (m as f64).sqrt() * (g * d + 0.5 * l_a * d * d);
    let slack = SLACK + gap;

    let l2 = problem.violation_norm(x, Norm::L2)?;
    let bound = theorem_violation_bound(m, delta, u, xi, args.mu, c1)?;
    let l1 = problem.violation_norm(x, Norm::L1)?;
    let (lo, hi) = value_gap_bounds(xi, m, delta, l1);
    let f_gap = problem.eval_objective(x)? - z.reference.f_star;
    cell.certified_gap = Some(gap);
    cell.violation_l2 = Some(l2);
    cell.theorem_bound = Some(bound);
    cell.tightness = Some(l2 / bound);
    cell.f_gap = Some(f_gap);
    cell.sandwich_lower = Some(lo);
    cell.sandwich_upper = Some(hi);
    cell.theorem_ok = Some(l2 <= bound + slack + drift);
    cell.sandwich_ok = Some(lo - slack <= f_gap && f_gap <= hi + slack);
    Ok(cell)
}

pub fn run(args: Args) -> CliResult<()> {
    if args.m_grid.is_empty() {
        return Err(CliError::input("--m-grid is empty"));
    }
    if let Some(grid) = &args.delta_grid {
        check_delta_grid(grid)?;
    } else if args.delta_count == 0 {
        return Err(CliError::input("--delta-count must be >= 1"));
    }
    let deltas: Vec<(Option<f64>, usize)> = match &args.delta_grid {
        Some(grid) => grid.iter().map(|d| (Some(*d), 0)).collect(),
        None => (0..args.delta_count).map(|k| (None, k)).collect(),
    };
    let mut jobs = Vec::new();
    for &seed in &args.seeds {
        for &m in &args.m_grid {
            for &(delta, k) in &deltas {
                jobs.push((seed, m, delta, k));
            }
        }
    }
    let cells = parallel_map(&jobs, |&(seed, m, delta, k)| {
        check_cell(&args, seed, m, delta, k)
    })?;

    let checked: Vec<&CellResult> = cells.iter().filter(|c| c.theorem_ok.is_some()).collect();
    let mut ratios: Vec<f64> = checked.iter().filter_map(|c| c.tightness).collect();
    ratios.sort_by(f64::total_cmp);
    let tightness = (!ratios.is_empty()).then(|| Quantiles {
        min: ratios[0],
        median: quantile(&ratios, 0.5),
        p90: quantile(&ratios, 0.9),
        max: ratios[ratios.len() - 1],
    });
    let summary = Summary {
        cells: cells.len(),
        checked: checked.len(),
        outside_window: cells.iter().filter(|c| !c.in_window).count(),
        uncertified: cells
            .iter()
            .filter(|c| c.in_window && c.theorem_ok.is_none())
            .count(),
        theorem_violations: checked
            .iter()
            .filter(|c| c.theorem_ok == Some(false))
            .count(),
        sandwich_violations: checked
            .iter()
            .filter(|c| c.sandwich_ok == Some(false))
            .count(),
        tightness,
    };
    let pass = summary.theorem_violations == 0
        && summary.sandwich_violations == 0
        && summary.uncertified == 0;
    let message = format!(
        "{} theorem and {} sandwich violations, {} uncertified cells",
        summary.theorem_violations, summary.sandwich_violations, summary.uncertified
    );
    let report = Report {
        family: "inverse_kkt",
        n: args.n,
        mu: args.mu,
        xi_factor: args.xi_factor,
        slack: SLACK,
        cells,
        summary,
        verdict: if pass { "PASS" } else { "FAIL" },
    };
    let mut json =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    json.push('\n');
    emit(None, json.as_bytes())?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification(message))
    }
}

//! Command implementations and the helpers they share.

pub mod check_bounds;
pub mod generate;
pub mod gradcheck;
pub mod reproduce;
pub mod solve;
pub mod sweep;

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use softpen::schema::ProblemSpec;
use softpen::solvers::{apg_solve, MomentumMode, SolverConfig, SolverReport};
use softpen::{ConstrainedProblem, PenalizedOracle};

use crate::error::{CliError, CliResult};

/// Iteration cap for the high-accuracy reference solves.
pub const REFERENCE_MAX_ITERATIONS: usize = 1_000_000;

/// Reads and validates a problem spec.
pub fn load_spec(path: &Path) -> CliResult<(ProblemSpec, ConstrainedProblem)> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let spec = ProblemSpec::from_json(&text)?;
    let problem = spec.to_problem()?;
    Ok((spec, problem))
}

/// Parses `a..b` (half-open) or a comma-separated list of seeds.
pub fn parse_seeds(text: &str) -> CliResult<Vec<u64>> {
    let bad = || {
        CliError::input(format!(
            "--seeds: expected `a..b` or a comma list, got `{text}`"
        ))
    };
    let seeds: Vec<u64> = if let Some((a, b)) = text.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        (a..b).collect()
    } else {
        text.split(',')
            .map(|s| s.trim().parse().map_err(|_| bad()))
            .collect::<CliResult<_>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

/// Rejects empty grids and non-positive or non-finite δ values.
pub fn check_delta_grid(grid: &[f64]) -> CliResult<()> {
    if grid.is_empty() {
        return Err(CliError::input("--delta-grid is empty"));
    }
    if let Some(d) = grid.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
        return Err(CliError::input(format!(
            "--delta-grid: δ must be finite and > 0, got {d}"
        )));
    }
    Ok(())
}

/// Maps `f` over `items` on a pool sized by `SOFTPEN_THREADS`, keeping input order.
pub fn parallel_map<T, R, F>(items: &[T], f: F) -> CliResult<Vec<R>>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> CliResult<R> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var("SOFTPEN_THREADS") {
        let threads: usize = value.parse().ok().filter(|t| *t > 0).ok_or_else(|| {
            CliError::input(format!(
                "SOFTPEN_THREADS must be a positive integer, got `{value}`"
            ))
        })?;
        builder = builder.num_threads(threads);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// APG to `target_gap = 1e-12·(1 + |F_{ξ,δ}(x0)|)`.
pub fn high_accuracy_solve(oracle: &PenalizedOracle, x0: &[f64]) -> CliResult<SolverReport> {
    let problem = oracle.problem();
    let target = 1e-12 * (1.0 + oracle.penalized_value(x0)?.abs());
    let momentum = if problem.mu() > 0.0 {
        MomentumMode::StronglyConvex { mu: problem.mu() }
    } else {
        MomentumMode::GeneralConvex
    };
    let config = SolverConfig::new(target, momentum).with_max_iterations(REFERENCE_MAX_ITERATIONS);
    Ok(apg_solve(oracle, x0, &config)?)
}

/// Least-squares slope of `ys` against `xs`; `None` with fewer than two distinct points.
pub fn fitted_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if var == 0.0 {
        return None;
    }
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(cov / var)
}

/// Writes `bytes` to `path`, or to stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match path {
        Some(p) => {
            fs::write(p, bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))
        }
        None => {
            let mut out = io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

/// Formats an optional number for a CSV cell; empty when absent.
pub fn cell(value: Option<f64>) -> String {
    value.map(|v| format!("{v:e}")).unwrap_or_default()
}

/// Starting point: the Slater point when the problem has one, else zero.
pub fn default_start(problem: &ConstrainedProblem) -> Vec<f64> {
    problem
        .slater_point()
        .map(|s| s.point.clone())
        .unwrap_or_else(|| vec![0.0; problem.dimension()])
}

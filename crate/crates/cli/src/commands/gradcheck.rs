//! `softpen gradcheck`: central-difference audit of every oracle in a spec.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use softpen::diagnostics::{gaussian_points, gradient_error};
use softpen::{PenalizedOracle, PenaltyConfig};

use super::{emit, load_spec};
use crate::error::{CliError, CliResult};

/// Largest relative error accepted for any oracle.
pub const THRESHOLD: f64 = 1e-5;
/// Smoothing parameters at which the penalized gradient is audited.
pub const AUDIT_DELTAS: [f64; 3] = [1e-1, 1e-2, 1e-3];

#[derive(Debug, Serialize)]
pub struct OracleResult {
    pub oracle: String,
    pub worst_error: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub points: usize,
    pub seed: u64,
    pub threshold: f64,
    pub oracles: Vec<OracleResult>,
    pub worst_oracle: String,
    pub worst_error: f64,
    pub verdict: &'static str,
}

fn worst(points: &[Vec<f64>], error: impl Fn(&[f64]) -> f64) -> f64 {
    points.iter().map(|x| error(x)).fold(0.0, f64::max)
}

pub fn run(spec_path: &Path, points: usize, seed: u64, xi: f64) -> CliResult<()> {
    if points == 0 {
        return Err(CliError::input("--points must be >= 1"));
    }
    let (spec, problem) = load_spec(spec_path)?;
    let center = spec
        .reference
        .as_ref()
        .map(|r| r.x_star.clone())
        .unwrap_or_else(|| super::default_start(&problem));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = gaussian_points(&mut rng, &center, 1.0, points);

    let mut results = Vec::new();
    for (i, c) in problem.components().iter().enumerate() {
        let f = &c.function;
        let e = worst(&samples, |x| {
            gradient_error(|y| f.value(y), |y| f.gradient(y), x)
        });
        results.push((format!("objective.components[{i}]"), e));
    }
    for (i, c) in problem.constraints().iter().enumerate() {
        let e = worst(&samples, |x| {
            gradient_error(|y| c.value(y), |y| c.gradient(y), x)
        });
        results.push((format!("constraints[{i}]"), e));
    }
    for delta in AUDIT_DELTAS {
        let oracle = PenalizedOracle::new(problem.clone(), PenaltyConfig::new(xi, delta)?);
        let e = worst(&samples, |x| {
            gradient_error(
                |y| oracle.smooth_part_value(y),
                |y| {
                    oracle
                        .penalized_gradient(y)
                        .expect("delta > 0 and dimension checked")
                },
                x,
            )
        });
        results.push((format!("penalized(delta={delta:e})"), e));
    }

    let (worst_oracle, worst_error) =
        results
            .iter()
            .fold((String::new(), 0.0_f64), |acc, (name, e)| {
                if *e > acc.1 {
                    (name.clone(), *e)
                } else {
                    acc
                }
            });
    let pass = worst_error <= THRESHOLD;
    let report = Report {
        points,
        seed,
        threshold: THRESHOLD,
        oracles: results
            .into_iter()
            .map(|(oracle, worst_error)| OracleResult {
                oracle,
                worst_error,
                passed: worst_error <= THRESHOLD,
            })
            .collect(),
        worst_oracle: worst_oracle.clone(),
        worst_error,
        verdict: if pass { "PASS" } else { "FAIL" },
    };
    let mut json =
        serde_json::to_string_pretty(&report).map_err(|e| CliError::Runtime(e.to_string()))?;
    json.push('\n');
    emit(None, json.as_bytes())?;
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "worst relative error {worst_error:e} at {worst_oracle}"
        )))
    }
}

//! Proximal SVRG over the finite-sum view of a composite objective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    strongly_convex_gap_check, Clock, FiniteSum, OracleCalls, SolverConfig, SolverReport,
    Termination, TraceRow,
};
use crate::error::{Error, Result};
use crate::vecops;

/// Average of all component gradients at `x`.
pub fn snapshot_gradient<O: FiniteSum + ?Sized>(objective: &O, x: &[f64]) -> Vec<f64> {
    let n = objective.num_components();
    let mut g = vec![0.0; x.len()];
    for i in 0..n {
        vecops::axpy(1.0 / n as f64, &objective.component_gradient(i, x), &mut g);
    }
    g
}

/// Sampler for epoch `epoch`: a ChaCha stream keyed by `(seed, epoch)`,
/// advanced once per inner step, so any epoch can be replayed on its own.
fn epoch_rng(seed: u64, epoch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch);
    rng
}

/// Prox-SVRG with uniform sampling, step `1/(3 L_max)` and last-iterate snapshots.
///
/// Each epoch starts from a full-gradient snapshot; the snapshot is also used
/// to test the strong-convexity gap certificate, so termination is decided on
/// exact full gradients only. `max_iterations` counts epochs.
pub fn prox_svrg_solve<O: FiniteSum + ?Sized>(
    objective: &O,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<SolverReport> {
    config.validate()?;
    let mu = config.momentum.mu();
    if !(mu > 0.0) {
        return Err(Error::invalid(
            "mu",
            "prox-SVRG requires a strongly convex objective (mu > 0); use apg_solve instead",
        ));
    }
    super::checked_smoothness(objective.smoothness())?;
    let n = objective.num_components();
    let l_max = super::checked_smoothness(objective.max_component_smoothness())?;
    let eta = 1.0 / (3.0 * l_max);
    let epoch_length = config.epoch_length.unwrap_or(2 * n);
    let clock = Clock::new(config.record_timing);

    let mut calls = OracleCalls::default();
    let mut trace = Vec::new();
    let mut notes = Vec::new();
    let mut snapshot = x0.to_vec();

    for epoch in 0..=config.max_iterations {
        let full = snapshot_gradient(objective, &snapshot);
        calls.full_gradients += 1;
        calls.component_gradients += n as u64;
        if full.iter().any(|g| !g.is_finite()) {
            notes.push(format!("non-finite gradient at epoch {epoch}"));
            let f = objective.value(&snapshot);
            return Ok(report(
                snapshot,
                f,
                epoch,
                calls,
                Termination::Stalled,
                None,
                trace,
                notes,
            ));
        }

        let check = strongly_convex_gap_check(
            objective,
            &snapshot,
            &full,
            mu,
            config.target_gap,
            &mut calls,
        );
        let f_snap = objective.value(&snapshot);
        trace.push(TraceRow {
            iteration: epoch,
            component_gradients_cum: calls.component_gradients,
            objective: f_snap,
            gradmap_norm: check.gradmap_norm,
            elapsed_secs: clock.elapsed(),
        });
        if !f_snap.is_finite() {
            notes.push(format!("non-finite objective {f_snap} at epoch {epoch}"));
            return Ok(report(
                snapshot,
                f_snap,
                epoch,
                calls,
                Termination::Stalled,
                None,
                trace,
                notes,
            ));
        }
        if check.gap_bound <= config.target_gap {
            let f = objective.value(&check.point);
            return Ok(report(
                check.point,
                f,
                epoch,
                calls,
                Termination::GapCertified,
                Some(check.gap_bound),
                trace,
                notes,
            ));
        }
        if epoch == config.max_iterations {
            break;
        }

        let mut rng = epoch_rng(config.seed, epoch as u64);
        let mut x = snapshot.clone();
        for _ in 0..epoch_length {
            let i = rng.gen_range(0..n);
            let gi = objective.component_gradient(i, &x);
            let gs = objective.component_gradient(i, &snapshot);
            calls.component_gradients += 2;
            let mut trial = x;
            for (((t, a), b), f) in trial.iter_mut().zip(&gi).zip(&gs).zip(&full) {
                *t -= eta * (a - b + f);
            }
            x = objective.prox(&trial, eta);
            calls.prox_calls += 1;
        }
        snapshot = x;
    }

    let f = objective.value(&snapshot);
    Ok(report(
        snapshot,
        f,
        config.max_iterations,
        calls,
        Termination::MaxIter,
        None,
        trace,
        notes,
    ))
}

#[allow(clippy::too_many_arguments)]
fn report(
    final_point: Vec<f64>,
    final_objective: f64,
    iterations_used: usize,
    oracle_calls: OracleCalls,
    termination: Termination,
    certified_gap: Option<f64>,
    trace: Vec<TraceRow>,
    notes: Vec<String>,
) -> SolverReport {
    SolverReport {
        solver: "svrg".into(),
        final_point,
        final_objective,
        iterations_used,
        oracle_calls,
        termination,
        certified_gap,
        trace,
        notes,
    }
}

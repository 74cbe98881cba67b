//! Accelerated proximal gradient with function-value restart.

use super::{
    strongly_convex_gap_check, Clock, CompositeObjective, MomentumMode, OracleCalls, SolverConfig,
    SolverReport, Termination, TraceRow,
};
use crate::error::Result;
use crate::vecops;

const GENERAL_CONVEX_NOTE: &str =
    "general-convex gap estimate uses ‖x0 − x̃‖ in place of the unknown distance to the \
     optimal set; it is exact only if the optimum lies within that radius (trust region)";
/// Relative objective increase treated as rounding noise rather than a failed momentum step.
const RESTART_TOLERANCE: f64 = 1e-12;
const DIAMETER_NOTE: &str =
    "gap certified by ‖s‖ · diam(dom ψ) for a subgradient s at the final point";

/// Minimizes `f + ψ` with step `1/L`, `L = objective.smoothness()`.
///
/// Momentum is FISTA-style for [`MomentumMode::GeneralConvex`] and the
/// constant `(√L − √μ)/(√L + √μ)` for [`MomentumMode::StronglyConvex`].
/// Whenever a step would increase the objective by more than a relative
/// `1e-12` the momentum is dropped and a plain prox-gradient step is taken
/// from the last iterate instead, so the objective sequence is nonincreasing
/// up to rounding.
pub fn apg_solve<O: CompositeObjective + ?Sized>(
    objective: &O,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<SolverReport> {
    config.validate()?;
    let l = super::checked_smoothness(objective.smoothness())?;
    let step = 1.0 / l;
    let mu = config.momentum.mu();
    let n_comp = objective.num_components() as u64;
    let clock = Clock::new(config.record_timing);

    let mut calls = OracleCalls::default();
    let mut x = objective.prox(x0, step);
    calls.prox_calls += 1;
    let x_start = x.clone();
    let mut fx = objective.value(&x);
    let mut y = x.clone();
    let mut theta = 1.0_f64;
    let strong_beta = (l.sqrt() - mu.sqrt()) / (l.sqrt() + mu.sqrt());

    let mut trace = Vec::new();
    let mut notes = Vec::new();
    if config.momentum == MomentumMode::GeneralConvex {
        notes.push(GENERAL_CONVEX_NOTE.to_string());
    }

    if !fx.is_finite() {
        notes.push(format!("non-finite objective {fx} at the starting point"));
        return Ok(report(
            x,
            fx,
            0,
            calls,
            Termination::Stalled,
            None,
            trace,
            notes,
        ));
    }

    for k in 1..=config.max_iterations {
        let mut grad = objective.smooth_gradient(&y);
        calls.full_gradients += 1;
        calls.component_gradients += n_comp;

        let mut trial = y.clone();
        vecops::axpy(-step, &grad, &mut trial);
        let mut x_new = objective.prox(&trial, step);
        calls.prox_calls += 1;
        let mut f_new = objective.value(&x_new);

        if !(f_new <= fx + RESTART_TOLERANCE * (1.0 + fx.abs())) && y != x {
            // restart: momentum step went uphill
            y = x.clone();
            theta = 1.0;
            grad = objective.smooth_gradient(&y);
            calls.full_gradients += 1;
            calls.component_gradients += n_comp;
            trial = y.clone();
            vecops::axpy(-step, &grad, &mut trial);
            x_new = objective.prox(&trial, step);
            calls.prox_calls += 1;
            f_new = objective.value(&x_new);
        }

        if !f_new.is_finite() {
            notes.push(format!("non-finite objective {f_new} at iteration {k}"));
            return Ok(report(
                x,
                fx,
                k,
                calls,
                Termination::Stalled,
                None,
                trace,
                notes,
            ));
        }

        let gmap = super::gradient_mapping(&grad, &trial, &x_new, l);
        let gmap_norm = vecops::norm2(&gmap);

        let (gap_bound, certified_point) = match config.momentum {
            MomentumMode::StronglyConvex { mu } => {
                let check = strongly_convex_gap_check(
                    objective,
                    &y,
                    &grad,
                    mu,
                    config.target_gap,
                    &mut calls,
                );
                (check.gap_bound, Some(check.point))
            }
            MomentumMode::GeneralConvex => {
                let radius = vecops::dist2(&x_start, &x_new);
                let rate = 2.0 * l * radius * radius / ((k + 1) as f64).powi(2);
                let mut bound = rate;
                if let Some(diam) = objective.domain_diameter() {
                    if rate > config.target_gap && gmap_norm * diam <= config.target_gap {
                        // s = G + ∇f(x⁺) − ∇f(y) is a subgradient of f + ψ at x⁺
                        let grad_plus = objective.smooth_gradient(&x_new);
                        calls.full_gradients += 1;
                        calls.component_gradients += n_comp;
                        let mut s = gmap.clone();
                        vecops::axpy(1.0, &grad_plus, &mut s);
                        vecops::axpy(-1.0, &grad, &mut s);
                        let by_diameter = vecops::norm2(&s) * diam;
                        if by_diameter < bound {
                            bound = by_diameter;
                            if !notes.iter().any(|n| n == DIAMETER_NOTE) {
                                notes.push(DIAMETER_NOTE.to_string());
                            }
                        }
                    }
                }
                (bound, None)
            }
        };

        trace.push(TraceRow {
            iteration: k,
            component_gradients_cum: calls.component_gradients,
            objective: f_new,
            gradmap_norm: gmap_norm,
            elapsed_secs: clock.elapsed(),
        });

        if gap_bound <= config.target_gap {
            // certified_point is the same prox step from y, i.e. x_new
            let point = certified_point.unwrap_or(x_new);
            let f_point = objective.value(&point);
            return Ok(report(
                point,
                f_point,
                k,
                calls,
                Termination::GapCertified,
                Some(gap_bound),
                trace,
                notes,
            ));
        }

        let beta = match config.momentum {
            MomentumMode::GeneralConvex => {
                let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
                let b = (theta - 1.0) / theta_next;
                theta = theta_next;
                b
            }
            MomentumMode::StronglyConvex { .. } => strong_beta,
        };
        y = x_new.clone();
        for ((yi, xn), xo) in y.iter_mut().zip(&x_new).zip(&x) {
            *yi = xn + beta * (xn - xo);
        }
        x = x_new;
        fx = f_new;
    }

    Ok(report(
        x,
        fx,
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
        solver: "apg".into(),
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

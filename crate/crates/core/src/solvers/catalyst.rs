//! Catalyst outer acceleration around prox-SVRG.

use super::{
    prox_svrg_solve, snapshot_gradient, strongly_convex_gap_check, Clock, CompositeObjective,
    FiniteSum, MomentumMode, OracleCalls, SolverConfig, SolverReport, Termination, TraceRow,
};
use crate::error::{Error, Result};
use crate::vecops;

/// `f(x) + ψ(x) + (κ/2)‖x − center‖²`, with the quadratic spread over every component.
#[derive(Debug)]
pub struct ProximalPointObjective<'a, O: ?Sized> {
    base: &'a O,
    center: Vec<f64>,
    kappa: f64,
}

impl<'a, O: FiniteSum + ?Sized> ProximalPointObjective<'a, O> {
    pub fn new(base: &'a O, center: Vec<f64>, kappa: f64) -> Self {
        Self {
            base,
            center,
            kappa,
        }
    }

    fn add_pull(&self, x: &[f64], mut g: Vec<f64>) -> Vec<f64> {
        for ((g, x), c) in g.iter_mut().zip(x).zip(&self.center) {
            *g += self.kappa * (x - c);
        }
        g
    }
}

impl<O: FiniteSum + ?Sized> CompositeObjective for ProximalPointObjective<'_, O> {
    fn dimension(&self) -> usize {
        self.base.dimension()
    }

    fn smooth_value(&self, x: &[f64]) -> f64 {
        let d = vecops::dist2(x, &self.center);
        self.base.smooth_value(x) + 0.5 * self.kappa * d * d
    }

    fn smooth_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.add_pull(x, self.base.smooth_gradient(x))
    }

    fn prox_value(&self, x: &[f64]) -> f64 {
        self.base.prox_value(x)
    }

    fn prox(&self, x: &[f64], tau: f64) -> Vec<f64> {
        self.base.prox(x, tau)
    }

    fn smoothness(&self) -> f64 {
        self.base.smoothness() + self.kappa
    }

    fn strong_convexity(&self) -> f64 {
        self.base.strong_convexity() + self.kappa
    }

    fn domain_diameter(&self) -> Option<f64> {
        self.base.domain_diameter()
    }

    fn num_components(&self) -> usize {
        self.base.num_components()
    }
}

impl<O: FiniteSum + ?Sized> FiniteSum for ProximalPointObjective<'_, O> {
    fn component_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        self.add_pull(x, self.base.component_gradient(i, x))
    }

    fn component_smoothness(&self, i: usize) -> f64 {
        self.base.component_smoothness(i) + self.kappa
    }
}

/// `L_max/(N + 1) − μ` for `N` components of largest smoothness `L_max`,
/// clipped away from zero.
pub fn default_kappa<O: FiniteSum + ?Sized>(objective: &O, mu: f64) -> f64 {
    let k = objective.max_component_smoothness() / (objective.num_components() + 1) as f64 - mu;
    k.max(1e-3 * mu).max(f64::MIN_POSITIVE)
}

/// Catalyst: repeatedly solve `F(x) + (κ/2)‖x − y_k‖²` with prox-SVRG,
/// warm-started, with extrapolated centers `y_k` and stage accuracies
/// set by a relative criterion against the current prox step, `q = μ/(μ + κ)`.
/// `config.max_iterations` bounds the epochs of every inner solve.
pub fn catalyst_solve<O: FiniteSum + ?Sized>(
    objective: &O,
    x0: &[f64],
    config: &SolverConfig,
) -> Result<SolverReport> {
    config.validate()?;
    let mu = config.momentum.mu();
    if !(mu > 0.0) {
        return Err(Error::invalid("mu", "catalyst requires mu > 0"));
    }
    super::checked_smoothness(objective.smoothness())?;
    let kappa = config
        .catalyst
        .kappa
        .unwrap_or_else(|| default_kappa(objective, mu));
    if !(kappa > 0.0) {
        return Err(Error::invalid(
            "catalyst_kappa",
            format!("must be > 0, got {kappa}"),
        ));
    }
    let q = mu / (mu + kappa);
    let n_comp = objective.num_components() as u64;
    let clock = Clock::new(config.record_timing);

    let mut calls = OracleCalls::default();
    let mut trace = Vec::new();
    let mut notes = vec![format!("catalyst kappa = {kappa:e}")];

    let full0 = snapshot_gradient(objective, x0);
    calls.full_gradients += 1;
    calls.component_gradients += n_comp;
    let start = strongly_convex_gap_check(objective, x0, &full0, mu, 0.0, &mut calls);
    // stage accuracies decay slightly slower than the outer rate √q
    let decay = 1.0 - 0.9 * q.sqrt();
    // the outer certificate needs gaps near target · μ/L
    let l = objective.smoothness();
    let floor = 1e-2 * q * config.target_gap * mu / (l + mu);
    let mut stage_gap = config
        .catalyst
        .initial_stage_gap
        .unwrap_or(2.0 / 9.0 * start.gap_bound)
        .max(floor);

    let mut alpha = q.sqrt();
    let mut x_prev = x0.to_vec();
    let mut center = x0.to_vec();
    let mut last = x0.to_vec();

    for stage in 1..=config.catalyst.max_stages {
        let sub = ProximalPointObjective::new(objective, center.clone(), kappa);
        let mut inner = *config;
        inner.target_gap = if stage == 1 {
            stage_gap
        } else {
            // relative criterion: inner error small against the current prox step
            let d = vecops::dist2(&x_prev, &center);
            (0.25 * q.sqrt() * kappa * d * d).max(floor)
        };
        inner.momentum = MomentumMode::StronglyConvex { mu: mu + kappa };
        inner.seed = config.seed.wrapping_add(stage as u64 - 1);
        let rep = prox_svrg_solve(&sub, &x_prev, &inner)?;
        calls.full_gradients += rep.oracle_calls.full_gradients;
        calls.component_gradients += rep.oracle_calls.component_gradients;
        calls.prox_calls += rep.oracle_calls.prox_calls;
        match rep.termination {
            Termination::Stalled => {
                return Err(Error::Stalled {
                    stage,
                    reason: rep.notes.join("; "),
                })
            }
            Termination::MaxIter => {
                notes.push(format!("stage {stage}: inner solve hit its epoch limit"))
            }
            Termination::GapCertified => {}
        }
        let x_k = rep.final_point;

        let full = snapshot_gradient(objective, &x_k);
        calls.full_gradients += 1;
        calls.component_gradients += n_comp;
        let check =
            strongly_convex_gap_check(objective, &x_k, &full, mu, config.target_gap, &mut calls);
        let f_k = objective.value(&x_k);
        if !f_k.is_finite() {
            return Err(Error::Stalled {
                stage,
                reason: format!("non-finite objective {f_k}"),
            });
        }
        trace.push(TraceRow {
            iteration: stage,
            component_gradients_cum: calls.component_gradients,
            objective: f_k,
            gradmap_norm: check.gradmap_norm,
            elapsed_secs: clock.elapsed(),
        });
        if check.gap_bound <= config.target_gap {
            let f = objective.value(&check.point);
            return Ok(report(
                check.point,
                f,
                stage,
                calls,
                Termination::GapCertified,
                Some(check.gap_bound),
                trace,
                notes,
            ));
        }

        let a2 = alpha * alpha;
        let b = a2 - q;
        let alpha_next = 0.5 * (-b + (b * b + 4.0 * a2).sqrt());
        let beta = alpha * (1.0 - alpha) / (a2 + alpha_next);
        center = x_k
            .iter()
            .zip(&x_prev)
            .map(|(xk, xp)| xk + beta * (xk - xp))
            .collect();
        alpha = alpha_next;
        x_prev = x_k.clone();
        last = x_k;
        stage_gap = (decay * stage_gap).max(floor);
    }

    let f = objective.value(&last);
    Ok(report(
        last,
        f,
        config.catalyst.max_stages,
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
        solver: "catalyst".into(),
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

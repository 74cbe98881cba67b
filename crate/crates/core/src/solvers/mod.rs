//! First-order solvers for composite problems `min f(x) + ψ(x)`.

mod apg;
mod catalyst;
mod svrg;

use std::io;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::vecops;

pub use apg::apg_solve;
pub use catalyst::{catalyst_solve, default_kappa, ProximalPointObjective};
pub use svrg::{prox_svrg_solve, snapshot_gradient};

/// Smooth-plus-prox objective as seen by the solvers.
pub trait CompositeObjective: Sync {
    fn dimension(&self) -> usize;

    fn smooth_value(&self, x: &[f64]) -> f64;

    fn smooth_gradient(&self, x: &[f64]) -> Vec<f64>;

    fn prox_value(&self, x: &[f64]) -> f64;

    fn prox(&self, x: &[f64], tau: f64) -> Vec<f64>;

    /// Lipschitz constant of `smooth_gradient`.
    fn smoothness(&self) -> f64;

    /// Strong-convexity modulus of the whole objective.
    fn strong_convexity(&self) -> f64;

    /// Euclidean diameter of `dom ψ`, when bounded.
    fn domain_diameter(&self) -> Option<f64> {
        None
    }

    /// Number of finite-sum components one full gradient is worth.
    fn num_components(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.smooth_value(x) + self.prox_value(x)
    }
}

/// Smooth part written as the average of `num_components()` components.
pub trait FiniteSum: CompositeObjective {
    fn component_gradient(&self, i: usize, x: &[f64]) -> Vec<f64>;

    fn component_smoothness(&self, i: usize) -> f64;

    fn max_component_smoothness(&self) -> f64 {
        (0..self.num_components())
            .map(|i| self.component_smoothness(i))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MomentumMode {
    GeneralConvex,
    StronglyConvex { mu: f64 },
}

impl MomentumMode {
    pub fn mu(&self) -> f64 {
        match *self {
            MomentumMode::GeneralConvex => 0.0,
            MomentumMode::StronglyConvex { mu } => mu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatalystConfig {
    /// Proximal weight; defaults to `L/(ℓ+m) − μ` clipped to stay positive.
    pub kappa: Option<f64>,
    pub max_stages: usize,
    /// Accuracy requested from the first inner solve; later stages shrink it geometrically.
    pub initial_stage_gap: Option<f64>,
}

impl Default for CatalystConfig {
    fn default() -> Self {
        Self {
            kappa: None,
            max_stages: 10_000,
            initial_stage_gap: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Iterations for APG, epochs for SVRG, inner epochs per stage for catalyst.
    pub max_iterations: usize,
    pub target_gap: f64,
    pub momentum: MomentumMode,
    pub seed: u64,
    /// SVRG inner steps per epoch; defaults to twice the number of components.
    pub epoch_length: Option<usize>,
    pub catalyst: CatalystConfig,
    /// Record wall-clock time in trace rows. Off by default so reports are bit-reproducible.
    pub record_timing: bool,
}

impl SolverConfig {
    pub fn new(target_gap: f64, momentum: MomentumMode) -> Self {
        Self {
            max_iterations: 1_000_000,
            target_gap,
            momentum,
            seed: 0,
            epoch_length: None,
            catalyst: CatalystConfig::default(),
            record_timing: false,
        }
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub(crate) fn validate(&self) -> crate::Result<()> {
        if !(self.target_gap > 0.0) {
            return Err(crate::Error::invalid("target_gap", "must be > 0"));
        }
        if self.epoch_length == Some(0) {
            return Err(crate::Error::invalid("epoch_length", "must be >= 1"));
        }
        if let MomentumMode::StronglyConvex { mu } = self.momentum {
            if !(mu > 0.0) {
                return Err(crate::Error::invalid(
                    "mu",
                    "strongly convex mode needs mu > 0",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleCalls {
    pub full_gradients: u64,
    /// Component gradients, with each full gradient counted as `ℓ + m` of them.
    pub component_gradients: u64,
    pub prox_calls: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GapCertified,
    MaxIter,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub component_gradients_cum: u64,
    pub objective: f64,
    pub gradmap_norm: f64,
    pub elapsed_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub solver: String,
    pub final_point: Vec<f64>,
    pub final_objective: f64,
    pub iterations_used: usize,
    pub oracle_calls: OracleCalls,
    pub termination: Termination,
    /// Upper bound on `F(x̃) − F*` behind the termination, when one was computed.
    pub certified_gap: Option<f64>,
    pub trace: Vec<TraceRow>,
    pub notes: Vec<String>,
}

impl SolverReport {
    pub fn is_certified(&self) -> bool {
        self.termination == Termination::GapCertified
    }

    /// Writes the trace as CSV with columns
    /// `iteration,component_gradients_cum,objective,gradmap_norm`.
    pub fn write_trace_csv(&self, mut out: impl io::Write) -> io::Result<()> {
        writeln!(
            out,
            "iteration,component_gradients_cum,objective,gradmap_norm"
        )?;
        for row in &self.trace {
            writeln!(
                out,
                "{},{},{:e},{:e}",
                row.iteration, row.component_gradients_cum, row.objective, row.gradmap_norm
            )?;
        }
        Ok(())
    }
}

/// Result of taking one prox-gradient step from `x` and bounding the gap at the new point.
#[derive(Debug, Clone)]
pub(crate) struct GapCheck {
    pub point: Vec<f64>,
    pub gradmap_norm: f64,
    pub gap_bound: f64,
}

/// Step `x⁺ = prox(x − ∇f(x)/L, 1/L)` and bound `F(x⁺) − F*` by strong convexity.
///
/// Two bounds are combined: the prox-gradient-mapping surrogate
/// `‖G_L(x)‖² (1 + L/μ) / (2μ)` and `‖s‖²/(2μ)` for the explicit subgradient
/// `s = G_L(x) + ∇f(x⁺) − ∇f(x) ∈ ∂F(x⁺)`. The second needs one more
/// gradient and is only evaluated once the surrogate is below `target`.
pub(crate) fn strongly_convex_gap_check<O: CompositeObjective + ?Sized>(
    objective: &O,
    x: &[f64],
    grad: &[f64],
    mu: f64,
    target: f64,
    calls: &mut OracleCalls,
) -> GapCheck {
    let l = objective.smoothness();
    let step = 1.0 / l;
    let mut trial = x.to_vec();
    vecops::axpy(-step, grad, &mut trial);
    let point = objective.prox(&trial, step);
    calls.prox_calls += 1;
    let gmap = gradient_mapping(grad, &trial, &point, l);
    let gnorm = vecops::norm2(&gmap);
    let surrogate = gnorm * gnorm * (1.0 + l / mu) / (2.0 * mu);
    let gap_bound = if surrogate <= target {
        let grad_plus = objective.smooth_gradient(&point);
        calls.full_gradients += 1;
        calls.component_gradients += objective.num_components() as u64;
        let mut s = gmap;
        vecops::axpy(1.0, &grad_plus, &mut s);
        vecops::axpy(-1.0, grad, &mut s);
        let sn = vecops::norm2(&s);
        surrogate.max(sn * sn / (2.0 * mu))
    } else {
        surrogate
    };
    GapCheck {
        point,
        gradmap_norm: gnorm,
        gap_bound,
    }
}

/// `G = ∇f(x) + L (t − x⁺)` with `t = x − ∇f(x)/L` and `x⁺ = prox(t)`.
///
/// Equal to `L (x − x⁺)` but exact where the prox leaves `t` unchanged,
/// avoiding the cancellation in `x − x⁺` when `L` is large.
pub(crate) fn gradient_mapping(grad: &[f64], trial: &[f64], point: &[f64], l: f64) -> Vec<f64> {
    grad.iter()
        .zip(trial.iter().zip(point))
        .map(|(g, (t, p))| g + l * (t - p))
        .collect()
}

pub(crate) fn checked_smoothness(l: f64) -> crate::Result<f64> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(crate::Error::invalid(
            "smoothness",
            format!("step size needs a finite positive L, got {l} (is delta > 0?)"),
        ));
    }
    Ok(l)
}

pub(crate) struct Clock {
    start: Option<Instant>,
}

impl Clock {
    pub fn new(enabled: bool) -> Self {
        Self {
            start: enabled.then(Instant::now),
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.start.map_or(0.0, |s| s.elapsed().as_secs_f64())
    }
}

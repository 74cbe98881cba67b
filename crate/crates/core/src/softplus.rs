//! Softplus penalty `p_δ(t) = δ log(1 + exp(t/δ))` and the penalized objective
//! `F_{ξ,δ}(x) = F(x) + ξ Σ p_δ(a_i(x))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ConstrainedProblem;
use crate::solvers::{CompositeObjective, FiniteSum};
use crate::vecops;

fn check_delta(delta: f64) -> Result<()> {
    if !(delta >= 0.0) {
        return Err(Error::invalid(
            "delta",
            format!("must be >= 0, got {delta}"),
        ));
    }
    Ok(())
}

fn check_positive_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", format!("must be > 0, got {delta}")));
    }
    Ok(())
}

/// Unchecked softplus; `delta` must be `>= 0`.
#[inline]
pub(crate) fn softplus_raw(delta: f64, t: f64) -> f64 {
    if delta == 0.0 {
        return t.max(0.0);
    }
    if t <= 0.0 {
        delta * (t / delta).exp().ln_1p()
    } else {
        t + delta * (-t / delta).exp().ln_1p()
    }
}

/// Unchecked logistic `σ(t/δ)`; `delta` must be `>= 0`.
#[inline]
pub(crate) fn sigmoid_raw(delta: f64, t: f64) -> f64 {
    if delta == 0.0 {
        return if t < 0.0 {
            0.0
        } else if t > 0.0 {
            1.0
        } else {
            0.5
        };
    }
    if t <= 0.0 {
        let e = (t / delta).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + (-t / delta).exp())
    }
}

/// `p_δ(t)`; `δ = 0` gives the hinge `max(0, t)`.
pub fn softplus(delta: f64, t: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(softplus_raw(delta, t))
}

/// `p'_δ(t) = σ(t/δ)`. At `δ = 0` returns 0.5 for `t = 0`.
pub fn softplus_deriv(delta: f64, t: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(sigmoid_raw(delta, t))
}

/// `p''_δ(t) = σ(t/δ) σ(−t/δ) / δ`, bounded by `1/(4δ)`.
pub fn softplus_second_deriv(delta: f64, t: f64) -> Result<f64> {
    check_positive_delta(delta)?;
    let s = sigmoid_raw(delta, t);
    let sc = sigmoid_raw(delta, -t);
    Ok(s * sc / delta)
}

/// How the smoothing parameter was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaProvenance {
    Manual,
    ScheduleConvex,
    ScheduleStronglyConvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub xi: f64,
    pub delta: f64,
    pub delta_provenance: DeltaProvenance,
}

impl PenaltyConfig {
    pub fn new(xi: f64, delta: f64) -> Result<Self> {
        Self::with_provenance(xi, delta, DeltaProvenance::Manual)
    }

    pub fn with_provenance(xi: f64, delta: f64, delta_provenance: DeltaProvenance) -> Result<Self> {
        if !(xi >= 0.0) || !xi.is_finite() {
            return Err(Error::invalid(
                "xi",
                format!("must be finite and >= 0, got {xi}"),
            ));
        }
        check_delta(delta)?;
        Ok(Self {
            xi,
            delta,
            delta_provenance,
        })
    }
}

/// `L_f + ξ Σ_i (L_{a,i} + C1_i/4 + C0_i/(4δ))`
pub fn penalty_smoothness_bound(
    problem: &ConstrainedProblem,
    config: &PenaltyConfig,
) -> Result<f64> {
    check_positive_delta(config.delta)?;
    let penalty: f64 = problem
        .constraints()
        .iter()
        .map(|c| {
            constraint_penalty_smoothness(c.smoothness, c.growth_c0, c.growth_c1, config.delta)
        })
        .sum();
    Ok(problem.objective_smoothness() + config.xi * penalty)
}

fn constraint_penalty_smoothness(l_a: f64, c0: f64, c1: f64, delta: f64) -> f64 {
    l_a + c1 / 4.0 + c0 / (4.0 * delta)
}

/// The penalized problem as a composite smooth-plus-prox objective.
///
/// Also exposes a finite-sum view with `ℓ + m` components: the objective
/// terms scaled by `(ℓ+m)/ℓ` and the penalty terms scaled by `(ℓ+m)ξ`, so
/// that their average is the smooth part of `F_{ξ,δ}`.
#[derive(Debug, Clone)]
pub struct PenalizedOracle {
    problem: ConstrainedProblem,
    config: PenaltyConfig,
    smoothness: f64,
}

impl PenalizedOracle {
    /// Oracle for evaluation only; `δ = 0` is allowed here.
    pub fn new(problem: ConstrainedProblem, config: PenaltyConfig) -> Self {
        let smoothness = if config.delta > 0.0 {
            penalty_smoothness_bound(&problem, &config).unwrap_or(f64::INFINITY)
        } else {
            f64::INFINITY
        };
        Self {
            problem,
            config,
            smoothness,
        }
    }

    pub fn problem(&self) -> &ConstrainedProblem {
        &self.problem
    }

    pub fn config(&self) -> &PenaltyConfig {
        &self.config
    }

    /// Declared smoothness of the smooth part, `penalty_smoothness_bound`.
    pub fn smoothness_bound(&self) -> f64 {
        self.smoothness
    }

    fn penalty_sum(&self, x: &[f64]) -> f64 {
        let delta = self.config.delta;
        self.problem
            .constraints()
            .iter()
            .map(|c| softplus_raw(delta, c.value(x)))
            .sum()
    }

    /// `(1/ℓ) Σ f_i(x) + ξ Σ p_δ(a_i(x))`, without `ψ`.
    pub fn smooth_part_value(&self, x: &[f64]) -> f64 {
        self.problem.smooth_value(x) + self.config.xi * self.penalty_sum(x)
    }

    /// `F(x) + ξ Σ p_δ(a_i(x))`, including `ψ`.
    pub fn penalized_value(&self, x: &[f64]) -> Result<f64> {
        let f = self.problem.eval_objective(x)?;
        Ok(f + self.config.xi * self.penalty_sum(x))
    }

    /// Gradient of the smooth part; requires `δ > 0`.
    pub fn penalized_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_positive_delta(self.config.delta)?;
        self.problem.check_point(x)?;
        Ok(self.gradient_unchecked(x))
    }

    fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let mut g = self.problem.smooth_gradient(x);
        let (xi, delta) = (self.config.xi, self.config.delta);
        for c in self.problem.constraints() {
            let w = xi * sigmoid_raw(delta, c.value(x));
            if w != 0.0 {
                vecops::axpy(w, &c.gradient(x), &mut g);
            }
        }
        g
    }

    /// `λ̂_i = ξ σ(a_i(x)/δ)`, the multipliers implied by the penalty at `x`.
    pub fn multiplier_estimates(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_positive_delta(self.config.delta)?;
        self.problem.check_point(x)?;
        let (xi, delta) = (self.config.xi, self.config.delta);
        Ok(self
            .problem
            .constraints()
            .iter()
            .map(|c| xi * sigmoid_raw(delta, c.value(x)))
            .collect())
    }

    /// Value of the `i`-th finite-sum component.
    pub fn component_value(&self, i: usize, x: &[f64]) -> f64 {
        let l = self.problem.num_components();
        let n = (l + self.problem.num_constraints()) as f64;
        if i < l {
            n / l as f64 * self.problem.components()[i].function.value(x)
        } else {
            let c = &self.problem.constraints()[i - l];
            n * self.config.xi * softplus_raw(self.config.delta, c.value(x))
        }
    }
}

impl CompositeObjective for PenalizedOracle {
    fn dimension(&self) -> usize {
        self.problem.dimension()
    }

    fn smooth_value(&self, x: &[f64]) -> f64 {
        self.smooth_part_value(x)
    }

    fn smooth_gradient(&self, x: &[f64]) -> Vec<f64> {
        self.gradient_unchecked(x)
    }

    fn prox_value(&self, x: &[f64]) -> f64 {
        self.problem.proximal().value(x)
    }

    fn prox(&self, x: &[f64], tau: f64) -> Vec<f64> {
        self.problem.proximal().prox(x, tau)
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn strong_convexity(&self) -> f64 {
        self.problem.mu()
    }

    fn domain_diameter(&self) -> Option<f64> {
        self.problem.proximal().diameter(self.problem.dimension())
    }

    fn num_components(&self) -> usize {
        self.problem.num_components() + self.problem.num_constraints()
    }
}

impl FiniteSum for PenalizedOracle {
    fn component_gradient(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let l = self.problem.num_components();
        let n = (l + self.problem.num_constraints()) as f64;
        if i < l {
            vecops::scaled(
                n / l as f64,
                &self.problem.components()[i].function.gradient(x),
            )
        } else {
            let c = &self.problem.constraints()[i - l];
            let w = n * self.config.xi * sigmoid_raw(self.config.delta, c.value(x));
            if w == 0.0 {
                vec![0.0; x.len()]
            } else {
                vecops::scaled(w, &c.gradient(x))
            }
        }
    }

    fn component_smoothness(&self, i: usize) -> f64 {
        let l = self.problem.num_components();
        let n = (l + self.problem.num_constraints()) as f64;
        if i < l {
            n / l as f64 * self.problem.components()[i].smoothness
        } else {
            let c = &self.problem.constraints()[i - l];
            n * self.config.xi
                * constraint_penalty_smoothness(
                    c.smoothness,
                    c.growth_c0,
                    c.growth_c1,
                    self.config.delta,
                )
        }
    }
}

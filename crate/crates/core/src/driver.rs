//! End-to-end pipeline: pick `(ξ, δ_ε)`, set the inner accuracy, run a
//! solver on `F_{ξ,δ}` and certify the result as an `(ε_A, ε_F)`-approximate
//! solution. Also exposes the bound formulas used by verification suites.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ConstrainedProblem, Norm, ReferenceSolution};
use crate::softplus::{DeltaProvenance, PenalizedOracle, PenaltyConfig};
use crate::solvers::{
    apg_solve, catalyst_solve, prox_svrg_solve, MomentumMode, SolverConfig, SolverReport,
};

const E_MINUS_2: f64 = 0.1353352832366127;

/// Inputs shared by the strongly convex schedule and its bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleInputs {
    pub epsilon: f64,
    pub m: usize,
    pub mu: f64,
    pub xi: f64,
    /// Growth aggregate `2 C1_max ‖A(x*)‖∞ + 2 m C0_max`, or an upper bound on it.
    pub u: f64,
    pub c0_max: f64,
    pub c1_max: f64,
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be finite and > 0, got {v}"),
        ))
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("m", "must be >= 1"));
    }
    Ok(())
}

/// `δ_ε = ε / (4 m log 2)`.
pub fn delta_schedule_convex(epsilon: f64, m: usize) -> Result<f64> {
    check_positive("epsilon", epsilon)?;
    check_m(m)?;
    Ok(epsilon / (4.0 * m as f64 * LN_2))
}

/// Largest admissible `ε` for the strongly convex schedule, `√m U ξ e⁻² / μ`.
pub fn strongly_convex_epsilon_max(inputs: &ScheduleInputs) -> f64 {
    (inputs.m as f64).sqrt() * inputs.u * inputs.xi * E_MINUS_2 / inputs.mu
}

/// `δ_ε = ε / (4√m) · (log(2√m U ξ / (μ ε)))⁻¹`.
///
/// Checks that `ε` is in range and that the returned value satisfies
/// `2√m δ log(Uξ/(μδ)) <= ε` and lies in the validity window.
pub fn delta_schedule_strongly_convex(inputs: &ScheduleInputs) -> Result<f64> {
    let ScheduleInputs {
        epsilon,
        m,
        mu,
        xi,
        u,
        ..
    } = *inputs;
    check_positive("epsilon", epsilon)?;
    check_positive("mu", mu)?;
    check_positive("xi", xi)?;
    check_positive("U", u)?;
    check_m(m)?;
    let eps_max = strongly_convex_epsilon_max(inputs);
    if epsilon > eps_max {
        return Err(Error::Schedule(format!(
            "epsilon = {epsilon} outside the admissible interval (0, {eps_max}] = (0, sqrt(m) U xi e^-2 / mu]"
        )));
    }
    let sm = (m as f64).sqrt();
    let delta = epsilon / (4.0 * sm) / (2.0 * sm * u * xi / (mu * epsilon)).ln();
    let guarantee = 2.0 * sm * delta * (u * xi / (mu * delta)).ln();
    if !(guarantee <= epsilon * (1.0 + 1e-12)) {
        return Err(Error::Schedule(format!(
            "schedule guarantee failed: 2 sqrt(m) delta log(U xi/(mu delta)) = {guarantee} > epsilon = {epsilon}"
        )));
    }
    let window = delta_validity_window(m, u, xi, mu, inputs.c1_max)?;
    if delta > window {
        return Err(Error::Schedule(format!(
            "delta = {delta} exceeds the validity window [0, {window}]; increase U or decrease epsilon"
        )));
    }
    Ok(delta)
}

/// Largest `Δ_max <= Uξe⁻²/μ` with `2 m C1 δ log(Uξ/(μδ)) <= U` on `[0, Δ_max]`.
pub fn delta_validity_window(m: usize, u: f64, xi: f64, mu: f64, c1_max: f64) -> Result<f64> {
    check_m(m)?;
    check_positive("U", u)?;
    check_positive("xi", xi)?;
    check_positive("mu", mu)?;
    if !(c1_max >= 0.0) {
        return Err(Error::invalid("C1_max", "must be >= 0"));
    }
    let cap = u * xi * E_MINUS_2 / mu;
    let lhs = |d: f64| 2.0 * m as f64 * c1_max * d * (u * xi / (mu * d)).ln();
    if c1_max == 0.0 || lhs(cap) <= u {
        return Ok(cap);
    }
    // lhs is increasing on (0, cap] since log(Uξ/(μδ)) >= 2 there
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..200 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if lhs(mid) <= u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// `√m δ log(Uξ/(μδ))`, the bound on `‖Ā(x*_{ξ,δ})‖₂`; errors outside the validity window.
pub fn theorem_violation_bound(
    m: usize,
    delta: f64,
    u: f64,
    xi: f64,
    mu: f64,
    c1_max: f64,
) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(Error::invalid("delta", "must be >= 0"));
    }
    let window = delta_validity_window(m, u, xi, mu, c1_max)?;
    if delta > window {
        return Err(Error::Schedule(format!(
            "delta = {delta} outside the validity window [0, {window}]"
        )));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    Ok((m as f64).sqrt() * delta * (u * xi / (mu * delta)).ln())
}

/// `(−ξ ‖Ā‖₁, m ξ δ log 2)`, the sandwich on `F(x*_{ξ,δ}) − F*`.
pub fn value_gap_bounds(xi: f64, m: usize, delta: f64, violation_l1: f64) -> (f64, f64) {
    (-xi * violation_l1, m as f64 * xi * delta * LN_2)
}

/// `(gap + m ξ δ log 2) / (ξ − ξ̄)`, a certified bound on `‖Ā(x̂)‖₁` given an
/// upper bound `gap` on `F_{ξ,δ}(x̂) − F_{ξ,δ}(x*)`.
pub fn prop3_l1_bound(
    xi: f64,
    xi_bar: f64,
    m: usize,
    delta: f64,
    penalized_gap: f64,
) -> Result<f64> {
    if !(xi > xi_bar) {
        return Err(Error::invalid(
            "xi",
            format!("must exceed xi_bar = {xi_bar}, got {xi}"),
        ));
    }
    if !(penalized_gap >= 0.0) {
        return Err(Error::invalid("penalized_gap", "must be >= 0"));
    }
    Ok((penalized_gap + m as f64 * xi * delta * LN_2) / (xi - xi_bar))
}

/// Inner accuracy for the strongly convex path.
///
/// With `r = √(2Δ/μ)` bounding `‖x̃ − x*_{ξ,δ}‖₂`, each constraint moves by at
/// most `g r + L_a r²/2` where `g² = C0 + C1 B`. Chooses the largest `Δ`
/// keeping this at `ε/(2√m)`.
pub fn strongly_convex_inner_target(
    epsilon: f64,
    m: usize,
    mu: f64,
    c0_max: f64,
    c1_max: f64,
    l_a_max: f64,
    bound: f64,
) -> f64 {
    let s = epsilon / (2.0 * (m as f64).sqrt());
    let g = (c0_max + c1_max * bound).sqrt();
    let r = if l_a_max > 0.0 {
        // positive root of (L_a/2) r² + g r − s, in cancellation-free form
        2.0 * s / (g + (g * g + 2.0 * l_a_max * s).sqrt())
    } else {
        s / g
    };
    0.5 * mu * r * r
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Apg,
    Svrg,
    Catalyst,
}

impl std::str::FromStr for SolverChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "apg" => Ok(SolverChoice::Apg),
            "svrg" => Ok(SolverChoice::Svrg),
            "catalyst" => Ok(SolverChoice::Catalyst),
            other => Err(Error::invalid(
                "solver",
                format!("unknown solver {other:?}"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UBoundSource {
    Supplied,
    Reference,
    SlaterHeuristic,
    InitialPointHeuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub xi: f64,
    pub epsilon: f64,
    pub q: Norm,
    pub solver: SolverChoice,
    pub seed: u64,
    /// Upper bound on the growth aggregate `U`; derived when absent.
    pub u_bound: Option<f64>,
    /// Use the general convex schedule even when `μ > 0`.
    pub force_general_convex: bool,
    pub max_iterations: usize,
    pub x0: Option<Vec<f64>>,
}

impl SolveOptions {
    pub fn new(xi: f64, epsilon: f64, q: Norm, solver: SolverChoice) -> Self {
        Self {
            xi,
            epsilon,
            q,
            solver,
            seed: 0,
            u_bound: None,
            force_general_convex: false,
            max_iterations: 1_000_000,
            x0: None,
        }
    }

    /// SHA-256 of the serialized options.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("options serialize");
        format!("{:x}", Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulePath {
    GeneralConvex,
    StronglyConvex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRecord {
    pub path: SchedulePath,
    pub epsilon: f64,
    pub m: usize,
    pub mu: f64,
    pub xi: f64,
    pub u: Option<f64>,
    pub u_source: Option<UBoundSource>,
    pub c0_max: f64,
    pub c1_max: f64,
    pub delta: f64,
    pub delta_provenance: DeltaProvenance,
    pub validity_window: Option<f64>,
    pub theorem_bound: Option<f64>,
    pub target_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub point: Vec<f64>,
    pub q: Norm,
    /// `‖Ā(x̃)‖_q`.
    pub eps_a_measured: f64,
    /// `F(x̃) − F*` when a reference is known.
    pub eps_f_measured: Option<f64>,
    /// Certified upper bound on `F_{ξ,δ}(x̃) − F_{ξ,δ}*` from the solver.
    pub certified_penalized_gap: Option<f64>,
    pub theoretical_eps_a: f64,
    pub theoretical_eps_f: f64,
    /// The norm in which `theoretical_eps_a` is guaranteed.
    pub theoretical_norm: Norm,
    pub certified: bool,
    pub schedule: ScheduleRecord,
    pub seed: u64,
    pub config_hash: String,
    pub warnings: Vec<String>,
    pub solver_report: SolverReport,
}

impl Certificate {
    /// Measured values within the theoretical ones plus `slack`; `None` without a reference.
    pub fn within_theory(&self, slack: f64) -> Option<bool> {
        let f = self.eps_f_measured?;
        Some(
            self.eps_a_measured <= self.theoretical_eps_a + slack
                && f <= self.theoretical_eps_f + slack,
        )
    }
}

fn growth_aggregate(problem: &ConstrainedProblem, point: &[f64]) -> Result<f64> {
    let values = problem.eval_constraints(point)?;
    let a_inf = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    Ok(2.0 * problem.max_growth_c1() * a_inf
        + 2.0 * problem.num_constraints() as f64 * problem.max_growth_c0())
}

fn resolve_u(
    problem: &ConstrainedProblem,
    reference: Option<&ReferenceSolution>,
    options: &SolveOptions,
    x0: &[f64],
    warnings: &mut Vec<String>,
) -> Result<(f64, UBoundSource)> {
    if let Some(u) = options.u_bound {
        check_positive("U", u)?;
        return Ok((u, UBoundSource::Supplied));
    }
    if let Some(r) = reference {
        return Ok((
            growth_aggregate(problem, &r.x_star)?,
            UBoundSource::Reference,
        ));
    }
    if let Some(s) = problem.slater_point() {
        warnings.push(
            "U estimated from the Slater point in place of x*; the validity window is only as good as this estimate"
                .into(),
        );
        return Ok((
            growth_aggregate(problem, &s.point)?,
            UBoundSource::SlaterHeuristic,
        ));
    }
    warnings.push(
        "U estimated from the initial point in place of x*; the validity window is only as good as this estimate".into(),
    );
    Ok((
        growth_aggregate(problem, x0)?,
        UBoundSource::InitialPointHeuristic,
    ))
}

/// Chooses `δ_ε` and the inner accuracy, runs the solver and certifies the result.
///
/// The general convex path (`μ = 0` or `force_general_convex`) is only
/// guaranteed for `ξ >= 2 ξ̄`; the strongly convex path for `ξ >= ξ̄`. When a
/// reference with multipliers is given the requirement is checked and a
/// warning recorded if it fails.
pub fn solve_constrained(
    problem: &ConstrainedProblem,
    reference: Option<&ReferenceSolution>,
    options: &SolveOptions,
) -> Result<Certificate> {
    check_positive("xi", options.xi)?;
    check_positive("epsilon", options.epsilon)?;
    if options.max_iterations == 0 {
        return Err(Error::invalid("max_iterations", "must be >= 1"));
    }
    let m = problem.num_constraints();
    check_m(m)?;
    let n = problem.dimension();
    let x0 = options.x0.clone().unwrap_or_else(|| vec![0.0; n]);
    problem.check_point(&x0)?;
    let mu = problem.mu();
    let strongly_convex = mu > 0.0 && !options.force_general_convex;
    let c0_max = problem.max_growth_c0();
    let c1_max = problem.max_growth_c1();
    let mut warnings = Vec::new();

    let xi_bar = reference.and_then(|r| r.multiplier_inf_norm());
    let needed = if strongly_convex { 1.0 } else { 2.0 };
    match xi_bar {
        Some(bar) if options.xi < needed * bar => warnings.push(format!(
            "xi = {} is below the required {needed} * xi_bar = {}; guarantees do not apply",
            options.xi,
            needed * bar
        )),
        Some(_) => {}
        None => warnings.push(format!(
            "caller asserts xi >= {needed} * xi_bar; not checked"
        )),
    }

    let (schedule, theoretical_eps_a, theoretical_eps_f, theoretical_norm) = if strongly_convex {
        let (u, source) = resolve_u(problem, reference, options, &x0, &mut warnings)?;
        let inputs = ScheduleInputs {
            epsilon: options.epsilon,
            m,
            mu,
            xi: options.xi,
            u,
            c0_max,
            c1_max,
        };
        let delta = delta_schedule_strongly_convex(&inputs)?;
        let window = delta_validity_window(m, u, options.xi, mu, c1_max)?;
        let bound = theorem_violation_bound(m, delta, u, options.xi, mu, c1_max)?;
        let l_a_max = problem
            .constraints()
            .iter()
            .fold(0.0_f64, |a, c| a.max(c.smoothness));
        let target =
            strongly_convex_inner_target(options.epsilon, m, mu, c0_max, c1_max, l_a_max, bound);
        let record = ScheduleRecord {
            path: SchedulePath::StronglyConvex,
            epsilon: options.epsilon,
            m,
            mu,
            xi: options.xi,
            u: Some(u),
            u_source: Some(source),
            c0_max,
            c1_max,
            delta,
            delta_provenance: DeltaProvenance::ScheduleStronglyConvex,
            validity_window: Some(window),
            theorem_bound: Some(bound),
            target_gap: target,
        };
        let eps_f = (m as f64).sqrt() * options.xi * options.epsilon;
        (record, options.epsilon, eps_f, Norm::L2)
    } else {
        let delta = delta_schedule_convex(options.epsilon, m)?;
        let record = ScheduleRecord {
            path: SchedulePath::GeneralConvex,
            epsilon: options.epsilon,
            m,
            mu,
            xi: options.xi,
            u: None,
            u_source: None,
            c0_max,
            c1_max,
            delta,
            delta_provenance: DeltaProvenance::ScheduleConvex,
            validity_window: None,
            theorem_bound: None,
            target_gap: m as f64 * options.xi * delta * LN_2,
        };
        (
            record,
            options.epsilon,
            options.xi * options.epsilon,
            Norm::L1,
        )
    };
    if options.q.rank() < theoretical_norm.rank() {
        warnings.push(format!(
            "the violation guarantee is stated in the {theoretical_norm}-norm; the measured {}-norm may exceed it",
            options.q
        ));
    }

    let config =
        PenaltyConfig::with_provenance(options.xi, schedule.delta, schedule.delta_provenance)?;
    let oracle = PenalizedOracle::new(problem.clone(), config);
    let momentum = if strongly_convex {
        MomentumMode::StronglyConvex { mu }
    } else {
        MomentumMode::GeneralConvex
    };
    let solver_config = SolverConfig::new(schedule.target_gap, momentum)
        .with_max_iterations(options.max_iterations)
        .with_seed(options.seed);
    let report = match (options.solver, strongly_convex) {
        (SolverChoice::Apg, _) => apg_solve(&oracle, &x0, &solver_config)?,
        (SolverChoice::Svrg, true) => prox_svrg_solve(&oracle, &x0, &solver_config)?,
        (SolverChoice::Catalyst, true) => catalyst_solve(&oracle, &x0, &solver_config)?,
        (_, false) => {
            return Err(Error::invalid(
                "solver",
                "svrg and catalyst need the strongly convex path; use apg",
            ))
        }
    };
    if !strongly_convex {
        warnings.push(
            "general convex gap certificate is an estimate relative to the distance from x0; it is not a rigorous bound"
                .into(),
        );
    }

    let point = report.final_point.clone();
    let eps_a_measured = problem.violation_norm(&point, options.q)?;
    let eps_f_measured = match reference {
        Some(r) => Some(problem.eval_objective(&point)? - r.f_star),
        None => None,
    };
    Ok(Certificate {
        point,
        q: options.q,
        eps_a_measured,
        eps_f_measured,
        certified_penalized_gap: report.certified_gap,
        theoretical_eps_a,
        theoretical_eps_f,
        theoretical_norm,
        certified: report.is_certified(),
        schedule,
        seed: options.seed,
        config_hash: options.config_hash(),
        warnings,
        solver_report: report,
    })
}

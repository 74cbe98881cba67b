//! Instances with known solutions: the two entrywise examples whose penalized
//! optima are available in closed form, random inverse-KKT instances, and a
//! log-sum-exp wrapper for max-type constraints.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{Affine, Quadratic, SmoothFunction};
use crate::model::{
    ConstrainedProblem, Constraint, ProximalTerm, ReferenceSolution, SlaterPoint, SmoothComponent,
};
use crate::schema::ProblemSpec;
use crate::softplus::sigmoid_raw;

/// Box radius of the trust region attached to the general-convex example.
pub const TRUST_REGION_RADIUS: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    EntrywiseLinear,
    EntrywiseQuadratic,
    InverseKkt,
}

/// Everything needed to regenerate an instance bit-identically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorRecord {
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub parameters: BTreeMap<String, f64>,
}

impl GeneratorRecord {
    /// Rebuilds the instance this record describes.
    pub fn regenerate(&self) -> Result<ZooInstance> {
        let p = |k: &str| -> Result<f64> {
            self.parameters
                .get(k)
                .copied()
                .ok_or_else(|| Error::schema(format!("generator_record.parameters.{k}"), "missing"))
        };
        let n = p("n")? as usize;
        let m = p("m")? as usize;
        match self.family {
            Family::EntrywiseLinear => {
                make_entrywise_linear(n, m, self.parameters.get("xi_hint").copied())
            }
            Family::EntrywiseQuadratic => make_entrywise_quadratic(n, m),
            Family::InverseKkt => {
                let seed = self
                    .seed
                    .ok_or_else(|| Error::schema("generator_record.seed", "missing"))?;
                make_inverse_kkt(seed, n, m, p("mu")?, p("n_active")? as usize)
            }
        }
    }
}

/// Closed-form minimizer of the penalized problem, where known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExactPenalizedOracle {
    /// Coordinates `δ log(ξ − 1)` for `i < m`, zero otherwise; `ξ ∈ (1, 2)`.
    EntrywiseLinear { n: usize, m: usize },
    /// Scalar root of `1 + t − ξ σ(−t/δ) = 0` for `i < m`, −1 otherwise; `ξ ∈ [1, 2)`.
    EntrywiseQuadratic { n: usize, m: usize },
}

impl ExactPenalizedOracle {
    pub fn solve(&self, xi: f64, delta: f64) -> Result<Vec<f64>> {
        if !(delta > 0.0) {
            return Err(Error::invalid("delta", "must be > 0"));
        }
        match *self {
            ExactPenalizedOracle::EntrywiseLinear { n, m } => {
                if !(xi > 1.0 && xi < 2.0) {
                    return Err(Error::Schedule(format!(
                        "closed form holds for xi in (1, 2), got {xi}"
                    )));
                }
                let t = delta * (xi - 1.0).ln();
                Ok((0..n).map(|i| if i < m { t } else { 0.0 }).collect())
            }
            ExactPenalizedOracle::EntrywiseQuadratic { n, m } => {
                let t = entrywise_quadratic_root(xi, delta)?;
                Ok((0..n).map(|i| if i < m { t } else { -1.0 }).collect())
            }
        }
    }
}

/// Root of `h(t) = 1 + t − ξ σ(−t/δ)` on `[−ξ, 0]`, bisected to full precision.
pub fn entrywise_quadratic_root(xi: f64, delta: f64) -> Result<f64> {
    if !(1.0..2.0).contains(&xi) {
        return Err(Error::Schedule(format!(
            "closed form holds for xi in [1, 2), got {xi}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", "must be > 0"));
    }
    let (mut lo, mut hi) = (-xi, 0.0_f64);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-300 {
            break;
        }
        if entrywise_quadratic_residual(xi, delta, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (rl, rh) = (
        entrywise_quadratic_residual(xi, delta, lo).abs(),
        entrywise_quadratic_residual(xi, delta, hi).abs(),
    );
    Ok(if rl < rh { lo } else { hi })
}

/// `1 + t − ξ σ(−t/δ)`
pub fn entrywise_quadratic_residual(xi: f64, delta: f64, t: f64) -> f64 {
    1.0 + t - xi * sigmoid_raw(delta, -t)
}

#[derive(Debug, Clone)]
pub struct ZooInstance {
    pub problem: ConstrainedProblem,
    pub reference: ReferenceSolution,
    pub generator_record: GeneratorRecord,
    pub exact_penalized_oracle: Option<ExactPenalizedOracle>,
}

impl ZooInstance {
    pub fn to_spec(&self) -> ProblemSpec {
        let name = match self.generator_record.family {
            Family::EntrywiseLinear => "entrywise_linear",
            Family::EntrywiseQuadratic => "entrywise_quadratic",
            Family::InverseKkt => "inverse_kkt",
        };
        ProblemSpec::from_problem(
            &self.problem,
            Some(&self.reference),
            Some(&self.generator_record),
            Some(name),
        )
        .expect("zoo instances have closed-form oracles")
    }

    pub fn instance_hash(&self) -> String {
        self.to_spec().content_hash()
    }

    /// `‖λ*‖∞`, the threshold penalty weight of the instance.
    pub fn xi_bar(&self) -> f64 {
        self.reference.multiplier_inf_norm().unwrap_or(0.0)
    }

    /// `2 C1_max ‖A(x*)‖∞ + 2 m C0_max` from the reference solution.
    pub fn growth_aggregate(&self) -> f64 {
        let values = self
            .problem
            .eval_constraints(&self.reference.x_star)
            .expect("reference has problem dimension");
        let a_inf = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        2.0 * self.problem.max_growth_c1() * a_inf
            + 2.0 * self.problem.num_constraints() as f64 * self.problem.max_growth_c0()
    }
}

fn check_sizes(n: usize, m: usize) -> Result<()> {
    if m == 0 || m > n {
        return Err(Error::invalid(
            "m",
            format!("need 1 <= m <= n, got m = {m}, n = {n}"),
        ));
    }
    Ok(())
}

fn neg_coordinate_constraints(n: usize, m: usize) -> Vec<Constraint> {
    (0..m)
        .map(|i| {
            let mut a = vec![0.0; n];
            a[i] = -1.0;
            Constraint::new(Arc::new(Affine::new(a, 0.0)), 0.0, 1.0, 0.0).expect("valid metadata")
        })
        .collect()
}

fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// `min Σ_{i<m} x_i  s.t. x_i >= 0 (i < m)`, with a wide box as proximal term.
///
/// `ξ̄ = 1`; for `ξ ∈ (1, 2)` the penalized optimum is `δ log(ξ − 1)` in
/// each constrained coordinate.
pub fn make_entrywise_linear(n: usize, m: usize, xi_hint: Option<f64>) -> Result<ZooInstance> {
    check_sizes(n, m)?;
    let v: Vec<f64> = (0..n).map(|i| if i < m { 1.0 } else { 0.0 }).collect();
    let objective = Quadratic::new(DMatrix::zeros(n, n), DVector::from_vec(v), 0.0)?;
    let problem = ConstrainedProblem::new(
        n,
        vec![SmoothComponent::new(Arc::new(objective), 0.0)?],
        ProximalTerm::Box {
            lower: -TRUST_REGION_RADIUS,
            upper: TRUST_REGION_RADIUS,
        },
        neg_coordinate_constraints(n, m),
        0.0,
        Some(SlaterPoint {
            point: vec![1.0; n],
            margin: 1.0,
        }),
    )?;
    let mut parameters = params(&[("n", n as f64), ("m", m as f64)]);
    if let Some(xi) = xi_hint {
        parameters.insert("xi_hint".into(), xi);
    }
    Ok(ZooInstance {
        problem,
        reference: ReferenceSolution {
            x_star: vec![0.0; n],
            f_star: 0.0,
            multipliers: Some(vec![1.0; m]),
            active_set: Some((0..m).collect()),
        },
        generator_record: GeneratorRecord {
            family: Family::EntrywiseLinear,
            seed: None,
            parameters,
        },
        exact_penalized_oracle: Some(ExactPenalizedOracle::EntrywiseLinear { n, m }),
    })
}

/// `min ½‖x‖² + eᵀx  s.t. x_i >= 0 (i < m)`; `μ = L_f = 1`, `ξ̄ = 1`.
pub fn make_entrywise_quadratic(n: usize, m: usize) -> Result<ZooInstance> {
    check_sizes(n, m)?;
    let objective = Quadratic::new(DMatrix::identity(n, n), DVector::from_element(n, 1.0), 0.0)?;
    let problem = ConstrainedProblem::new(
        n,
        vec![SmoothComponent::new(Arc::new(objective), 1.0)?],
        ProximalTerm::Zero,
        neg_coordinate_constraints(n, m),
        1.0,
        Some(SlaterPoint {
            point: vec![1.0; n],
            margin: 1.0,
        }),
    )?;
    let x_star: Vec<f64> = (0..n).map(|i| if i < m { 0.0 } else { -1.0 }).collect();
    Ok(ZooInstance {
        problem,
        reference: ReferenceSolution {
            x_star,
            f_star: -0.5 * (n - m) as f64,
            multipliers: Some(vec![1.0; m]),
            active_set: Some((0..m).collect()),
        },
        generator_record: GeneratorRecord {
            family: Family::EntrywiseQuadratic,
            seed: None,
            parameters: params(&[("n", n as f64), ("m", m as f64)]),
        },
        exact_penalized_oracle: Some(ExactPenalizedOracle::EntrywiseQuadratic { n, m }),
    })
}

const SLATER_DISTANCE: f64 = 1.5;
const CENTER_JITTER: f64 = 0.2;
const LINEAR_TERM_SCALE: f64 = 0.3;
const MIN_SLATER_SLACK: f64 = 0.1;
const MAX_RETRIES: usize = 50;

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vector(rng, n);
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

/// Random strongly convex problem with quadratic constraints, built backwards
/// from a chosen optimum `x*`, active set and multipliers so that the KKT
/// conditions hold exactly.
///
/// Constraints are `½(x − c_i)ᵀQ_i(x − c_i) + b_iᵀx + d_i` with `Q_i ≻ 0`,
/// shifted so that `a_i(x*) = 0` on the active set and `a_i(x*) ∈ [−2, −0.5]`
/// elsewhere. A Slater point `x̂` at distance 1.5 from `x*` is drawn first
/// and each constraint is redrawn until `a_i(x̂) <= −0.1`. The objective is
/// `(μ/2)‖x − x*‖² + gᵀ(x − x*)` with `g = −Σ λ*_i ∇a_i(x*)`.
pub fn make_inverse_kkt(
    seed: u64,
    n: usize,
    m: usize,
    mu: f64,
    n_active: usize,
) -> Result<ZooInstance> {
    if n == 0 || m == 0 {
        return Err(Error::invalid("n, m", "must be >= 1"));
    }
    if n_active > m.min(n) {
        return Err(Error::invalid(
            "n_active",
            format!("must be <= min(m, n) = {}", m.min(n)),
        ));
    }
    if !(mu > 0.0) {
        return Err(Error::invalid("mu", "must be > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x_star = gaussian_vector(&mut rng, n);
    let slater = &x_star + unit_vector(&mut rng, n) * SLATER_DISTANCE;
    let mut active = index::sample(&mut rng, m, n_active).into_vec();
    active.sort_unstable();

    let mut quadratics = Vec::with_capacity(m);
    for i in 0..m {
        let target = if active.binary_search(&i).is_ok() {
            0.0
        } else {
            rng.gen_range(-2.0..-0.5)
        };
        let mut accepted = None;
        for _ in 0..MAX_RETRIES {
            let b_mat = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal))
                / (n as f64).sqrt();
            let q = &b_mat * b_mat.transpose() + DMatrix::identity(n, n) * 0.1;
            let center =
                &slater + gaussian_vector(&mut rng, n) * (CENTER_JITTER / (n as f64).sqrt());
            let b = gaussian_vector(&mut rng, n) * (LINEAR_TERM_SCALE / (n as f64).sqrt());
            let shape = Quadratic::centered(q.clone(), &center, &b, 0.0)?;
            let d = target - shape.value(x_star.as_slice());
            let a = Quadratic::centered(q, &center, &b, d)?;
            if a.value(slater.as_slice()) <= -MIN_SLATER_SLACK {
                accepted = Some(a);
                break;
            }
        }
        let a = accepted.ok_or_else(|| {
            Error::Generation(format!(
                "constraint {i}: no strictly feasible draw after {MAX_RETRIES} retries"
            ))
        })?;
        quadratics.push(a);
    }

    let mut multipliers = vec![0.0; m];
    for &i in &active {
        multipliers[i] = rng.gen_range(0.5..2.0);
    }
    let mut g = DVector::zeros(n);
    for (a, l) in quadratics.iter().zip(&multipliers) {
        if *l > 0.0 {
            g -= DVector::from_vec(a.gradient(x_star.as_slice())) * *l;
        }
    }
    let objective = Quadratic::new(
        DMatrix::identity(n, n) * mu,
        &g - &x_star * mu,
        0.5 * mu * x_star.norm_squared() - g.dot(&x_star),
    )?;

    let mut constraints = Vec::with_capacity(m);
    let mut margin = f64::INFINITY;
    for (i, a) in quadratics.into_iter().enumerate() {
        let l_a = a.max_eigenvalue();
        let (_, a_min) = a.minimum().ok_or_else(|| {
            Error::Generation(format!("constraint {i}: matrix is not positive definite"))
        })?;
        margin = margin.min(-a.value(slater.as_slice()));
        // ‖∇a‖² <= 2 L_a (a − a_min) <= 2 L_a |a_min| + 2 L_a |a|
        let c0 = 2.0 * l_a * a_min.abs();
        constraints.push(Constraint::new(Arc::new(a), l_a, c0, 2.0 * l_a)?);
    }

    let problem = ConstrainedProblem::new(
        n,
        vec![SmoothComponent::new(Arc::new(objective), mu)?],
        ProximalTerm::Zero,
        constraints,
        mu,
        Some(SlaterPoint {
            point: slater.as_slice().to_vec(),
            margin,
        }),
    )?;
    Ok(ZooInstance {
        problem,
        reference: ReferenceSolution {
            x_star: x_star.as_slice().to_vec(),
            f_star: 0.0,
            multipliers: Some(multipliers),
            active_set: Some(active),
        },
        generator_record: GeneratorRecord {
            family: Family::InverseKkt,
            seed: Some(seed),
            parameters: params(&[
                ("n", n as f64),
                ("m", m as f64),
                ("mu", mu),
                ("n_active", n_active as f64),
            ]),
        },
        exact_penalized_oracle: None,
    })
}

/// Log-sum-exp smoothing `â(x) = δ' log Σ_j exp(g_j(x)/δ')` of `max_j g_j(x)`.
///
/// Satisfies `max_j g_j <= â <= max_j g_j + δ' log k`.
#[derive(Debug, Clone)]
pub struct SmoothedConstraint {
    pieces: Vec<Constraint>,
    smoothing: f64,
    gradient_bound: f64,
}

/// Smooths a max of `pieces`; `gradient_bound` bounds `‖∇g_j‖₂` on the region of interest.
pub fn smooth_max_constraint(
    pieces: Vec<Constraint>,
    delta_prime: f64,
    gradient_bound: f64,
) -> Result<SmoothedConstraint> {
    if pieces.is_empty() {
        return Err(Error::invalid("pieces", "need at least one piece"));
    }
    if !(delta_prime > 0.0) {
        return Err(Error::invalid("delta_prime", "must be > 0"));
    }
    if !(gradient_bound >= 0.0) {
        return Err(Error::invalid("gradient_bound", "must be >= 0"));
    }
    let n = pieces[0].function.dimension();
    if let Some(p) = pieces.iter().find(|p| p.function.dimension() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: p.function.dimension(),
        });
    }
    Ok(SmoothedConstraint {
        pieces,
        smoothing: delta_prime,
        gradient_bound,
    })
}

impl SmoothedConstraint {
    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// `Δ = δ' log k`
    pub fn approx_error(&self) -> f64 {
        self.smoothing * (self.pieces.len() as f64).ln()
    }

    /// The non-smooth `max_j g_j(x)`.
    pub fn max_value(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Softmax weights together with the smoothed value.
    fn weights(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let values: Vec<f64> = self.pieces.iter().map(|p| p.value(x)).collect();
        let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = values
            .iter()
            .map(|v| ((v - top) / self.smoothing).exp())
            .collect();
        let total: f64 = exps.iter().sum();
        let value = top + self.smoothing * total.ln();
        (exps.into_iter().map(|e| e / total).collect(), value)
    }

    /// Wraps the smoothed function as a constraint with
    /// `L_a = max L_g + G²/δ'`, `C1 = max C1_j` and
    /// `C0 = max C0_j + C1 · k δ'/e`, the last term absorbing
    /// `Σ_j w_j |g_j| <= |â| + k δ'/e`.
    pub fn into_constraint(self) -> Result<Constraint> {
        let k = self.pieces.len() as f64;
        let l_g = self.pieces.iter().fold(0.0_f64, |m, p| m.max(p.smoothness));
        let c0 = self.pieces.iter().fold(0.0_f64, |m, p| m.max(p.growth_c0));
        let c1 = self.pieces.iter().fold(0.0_f64, |m, p| m.max(p.growth_c1));
        let l_a = l_g + self.gradient_bound * self.gradient_bound / self.smoothing;
        let c0 = c0 + c1 * k * self.smoothing / E;
        Constraint::new(Arc::new(self), l_a, c0, c1)
    }
}

impl SmoothFunction for SmoothedConstraint {
    fn dimension(&self) -> usize {
        self.pieces[0].function.dimension()
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.weights(x).1
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (w, _) = self.weights(x);
        let mut g = vec![0.0; x.len()];
        for (p, w) in self.pieces.iter().zip(w) {
            if w != 0.0 {
                for (g, d) in g.iter_mut().zip(p.gradient(x)) {
                    *g += w * d;
                }
            }
        }
        g
    }
}

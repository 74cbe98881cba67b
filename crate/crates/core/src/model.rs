//! Problem representation: a finite-sum smooth objective plus a proximal term,
//! subject to smooth convex inequality constraints `a_i(x) <= 0`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::SmoothFunction;
use crate::vecops;

/// One summand `f_i` of the objective together with its gradient Lipschitz constant.
#[derive(Debug, Clone)]
pub struct SmoothComponent {
    pub function: Arc<dyn SmoothFunction>,
    pub smoothness: f64,
}

impl SmoothComponent {
    pub fn new(function: Arc<dyn SmoothFunction>, smoothness: f64) -> Result<Self> {
        if !(smoothness >= 0.0) {
            return Err(Error::invalid(
                "smoothness",
                format!("must be >= 0, got {smoothness}"),
            ));
        }
        Ok(Self {
            function,
            smoothness,
        })
    }
}

/// Closed convex term handled through its proximal operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProximalTerm {
    /// `ψ ≡ 0`
    Zero,
    /// Indicator of the box `[lower, upper]^n`.
    Box { lower: f64, upper: f64 },
}

impl ProximalTerm {
    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            ProximalTerm::Zero => 0.0,
            ProximalTerm::Box { lower, upper } => {
                if x.iter().all(|v| *v >= lower && *v <= upper) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `argmin_u ψ(u) + ‖u − x‖² / (2τ)`
    pub fn prox(&self, x: &[f64], _tau: f64) -> Vec<f64> {
        match *self {
            ProximalTerm::Zero => x.to_vec(),
            ProximalTerm::Box { lower, upper } => x.iter().map(|v| v.clamp(lower, upper)).collect(),
        }
    }

    /// Euclidean diameter of the domain in dimension `n`, if bounded.
    pub fn diameter(&self, n: usize) -> Option<f64> {
        match *self {
            ProximalTerm::Zero => None,
            ProximalTerm::Box { lower, upper } => Some((upper - lower) * (n as f64).sqrt()),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ProximalTerm::Zero)
    }
}

/// A smooth convex constraint `a(x) <= 0` with the constants of the growth
/// condition `‖∇a(x)‖² <= C0 + C1 |a(x)|`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub function: Arc<dyn SmoothFunction>,
    pub smoothness: f64,
    pub growth_c0: f64,
    pub growth_c1: f64,
}

impl Constraint {
    pub fn new(
        function: Arc<dyn SmoothFunction>,
        smoothness: f64,
        growth_c0: f64,
        growth_c1: f64,
    ) -> Result<Self> {
        if !(smoothness >= 0.0) {
            return Err(Error::invalid(
                "L_a",
                format!("must be >= 0, got {smoothness}"),
            ));
        }
        if !(growth_c0 > 0.0) {
            return Err(Error::invalid(
                "C0",
                format!("must be > 0, got {growth_c0}"),
            ));
        }
        if !(growth_c1 >= 0.0) {
            return Err(Error::invalid(
                "C1",
                format!("must be >= 0, got {growth_c1}"),
            ));
        }
        Ok(Self {
            function,
            smoothness,
            growth_c0,
            growth_c1,
        })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.function.value(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.function.gradient(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlaterPoint {
    pub point: Vec<f64>,
    pub margin: f64,
}

/// Norm used to measure constraint violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Norm {
    #[serde(rename = "1")]
    L1,
    #[serde(rename = "2")]
    L2,
    #[serde(rename = "inf")]
    Inf,
}

impl Norm {
    /// Position in the ordering `‖·‖₁ >= ‖·‖₂ >= ‖·‖∞`.
    pub fn rank(&self) -> u8 {
        match self {
            Norm::L1 => 0,
            Norm::L2 => 1,
            Norm::Inf => 2,
        }
    }

    pub fn from_q(q: f64) -> Result<Self> {
        if q == 1.0 {
            Ok(Norm::L1)
        } else if q == 2.0 {
            Ok(Norm::L2)
        } else if q == f64::INFINITY {
            Ok(Norm::Inf)
        } else {
            Err(Error::UnsupportedNorm(q.to_string()))
        }
    }

    pub fn of(&self, v: &[f64]) -> f64 {
        match self {
            Norm::L1 => v.iter().map(|x| x.abs()).sum(),
            Norm::L2 => vecops::norm2(v),
            Norm::Inf => vecops::norm_inf(v),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" => Ok(Norm::L1),
            "2" => Ok(Norm::L2),
            "inf" | "infinity" => Ok(Norm::Inf),
            other => Err(Error::UnsupportedNorm(other.to_string())),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "1",
            Norm::L2 => "2",
            Norm::Inf => "inf",
        })
    }
}

/// `‖(max(0, v_1), …, max(0, v_m))‖_q`
pub fn positive_part_norm(values: &[f64], q: Norm) -> f64 {
    let clipped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    q.of(&clipped)
}

/// `F(x) = (1/ℓ) Σ f_i(x) + ψ(x)` subject to `a_i(x) <= 0`.
#[derive(Debug, Clone)]
pub struct ConstrainedProblem {
    dimension: usize,
    components: Vec<SmoothComponent>,
    proximal: ProximalTerm,
    constraints: Vec<Constraint>,
    mu: f64,
    slater: Option<SlaterPoint>,
}

impl ConstrainedProblem {
    pub fn new(
        dimension: usize,
        components: Vec<SmoothComponent>,
        proximal: ProximalTerm,
        constraints: Vec<Constraint>,
        mu: f64,
        slater: Option<SlaterPoint>,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::invalid("dimension", "must be >= 1"));
        }
        if components.is_empty() {
            return Err(Error::invalid(
                "components",
                "need at least one objective component",
            ));
        }
        if constraints.is_empty() {
            return Err(Error::invalid(
                "constraints",
                "need at least one constraint",
            ));
        }
        if !(mu >= 0.0) {
            return Err(Error::invalid("mu", format!("must be >= 0, got {mu}")));
        }
        for c in &components {
            check_dim(dimension, c.function.dimension())?;
        }
        for c in &constraints {
            check_dim(dimension, c.function.dimension())?;
        }
        if let Some(s) = &slater {
            check_dim(dimension, s.point.len())?;
            if !(s.margin > 0.0) {
                return Err(Error::invalid("slater_point.margin", "must be > 0"));
            }
            for (i, c) in constraints.iter().enumerate() {
                let v = c.value(&s.point);
                if v > -s.margin {
                    return Err(Error::invalid(
                        "slater_point",
                        format!("constraint {i} has value {v} > -{}", s.margin),
                    ));
                }
            }
        }
        Ok(Self {
            dimension,
            components,
            proximal,
            constraints,
            mu,
            slater,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn components(&self) -> &[SmoothComponent] {
        &self.components
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn proximal(&self) -> ProximalTerm {
        self.proximal
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn slater_point(&self) -> Option<&SlaterPoint> {
        self.slater.as_ref()
    }

    /// Largest component smoothness constant `L_f`.
    pub fn objective_smoothness(&self) -> f64 {
        self.components.iter().fold(0.0, |m, c| m.max(c.smoothness))
    }

    pub fn max_growth_c0(&self) -> f64 {
        self.constraints.iter().fold(0.0, |m, c| m.max(c.growth_c0))
    }

    pub fn max_growth_c1(&self) -> f64 {
        self.constraints.iter().fold(0.0, |m, c| m.max(c.growth_c1))
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        check_dim(self.dimension, x.len())
    }

    /// `(1/ℓ) Σ f_i(x)` without the proximal term.
    pub fn smooth_value(&self, x: &[f64]) -> f64 {
        let l = self.components.len() as f64;
        self.components
            .iter()
            .map(|c| c.function.value(x))
            .sum::<f64>()
            / l
    }

    pub fn smooth_gradient(&self, x: &[f64]) -> Vec<f64> {
        let l = self.components.len() as f64;
        let mut g = vec![0.0; self.dimension];
        for c in &self.components {
            vecops::axpy(1.0 / l, &c.function.gradient(x), &mut g);
        }
        g
    }

    pub fn eval_objective(&self, x: &[f64]) -> Result<f64> {
        self.check_point(x)?;
        Ok(self.smooth_value(x) + self.proximal.value(x))
    }

    pub fn eval_constraints(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        Ok(self.constraints.iter().map(|c| c.value(x)).collect())
    }

    pub fn violation_norm(&self, x: &[f64], q: Norm) -> Result<f64> {
        Ok(positive_part_norm(&self.eval_constraints(x)?, q))
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Known optimum of a constrained problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_set: Option<Vec<usize>>,
}

impl ReferenceSolution {
    /// `‖∇F(x*) + Σ λ*_i ∇a_i(x*)‖₂`, treating `ψ` as inactive at `x*`.
    pub fn kkt_residual(&self, problem: &ConstrainedProblem) -> Result<f64> {
        problem.check_point(&self.x_star)?;
        let mut r = problem.smooth_gradient(&self.x_star);
        if let Some(lambda) = &self.multipliers {
            check_dim(problem.num_constraints(), lambda.len())?;
            for (c, l) in problem.constraints().iter().zip(lambda) {
                if *l != 0.0 {
                    vecops::axpy(*l, &c.gradient(&self.x_star), &mut r);
                }
            }
        }
        Ok(vecops::norm2(&r))
    }

    /// Largest `|a_i(x*)|` over constraints with a positive multiplier.
    pub fn complementarity_error(&self, problem: &ConstrainedProblem) -> Result<f64> {
        let values = problem.eval_constraints(&self.x_star)?;
        let Some(lambda) = &self.multipliers else {
            return Ok(0.0);
        };
        Ok(values
            .iter()
            .zip(lambda)
            .filter(|(_, l)| **l > 0.0)
            .fold(0.0, |m, (v, _)| m.max(v.abs())))
    }

    /// `‖λ*‖∞`, the smallest admissible penalty weight when the multiplier is unique.
    pub fn multiplier_inf_norm(&self) -> Option<f64> {
        self.multipliers.as_ref().map(|l| vecops::norm_inf(l))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthAudit {
    pub max_ratio: f64,
    /// Indices into the sample set where `‖∇a‖² > C0 + C1|a|`.
    pub violating_points: Vec<usize>,
}

/// Check `‖∇a(x)‖² <= C0 + C1 |a(x)|` on the given samples.
pub fn audit_growth_condition(
    constraint: &Constraint,
    samples: &[Vec<f64>],
) -> Result<GrowthAudit> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "need at least one sample point"));
    }
    let mut max_ratio = 0.0_f64;
    let mut violating_points = Vec::new();
    for (k, x) in samples.iter().enumerate() {
        check_dim(constraint.function.dimension(), x.len())?;
        let g = constraint.gradient(x);
        let lhs = vecops::dot(&g, &g);
        let rhs = constraint.growth_c0 + constraint.growth_c1 * constraint.value(x).abs();
        let ratio = lhs / rhs;
        max_ratio = max_ratio.max(ratio);
        if ratio > 1.0 {
            violating_points.push(k);
        }
    }
    Ok(GrowthAudit {
        max_ratio,
        violating_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{Affine, Quadratic};
    use nalgebra::{DMatrix, DVector};

    fn half_norm_sq(n: usize) -> SmoothComponent {
        let f = Quadratic::new(DMatrix::identity(n, n), DVector::zeros(n), 0.0).unwrap();
        SmoothComponent::new(Arc::new(f), 1.0).unwrap()
    }

    fn neg_coord(n: usize, i: usize) -> Constraint {
        let mut a = vec![0.0; n];
        a[i] = -1.0;
        Constraint::new(Arc::new(Affine::new(a, 0.0)), 0.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn objective_of_half_norm_at_origin() {
        let p = ConstrainedProblem::new(
            3,
            vec![half_norm_sq(3)],
            ProximalTerm::Zero,
            vec![neg_coord(3, 0)],
            1.0,
            None,
        )
        .unwrap();
        assert_eq!(p.eval_objective(&[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let p = ConstrainedProblem::new(
            3,
            vec![half_norm_sq(3)],
            ProximalTerm::Zero,
            vec![neg_coord(3, 0)],
            1.0,
            None,
        )
        .unwrap();
        assert_eq!(
            p.eval_objective(&[0.0; 2]).unwrap_err(),
            Error::DimensionMismatch {
                expected: 3,
                got: 2
            }
        );
        assert!(p.eval_constraints(&[0.0; 4]).is_err());
    }

    #[test]
    fn violation_norms_of_fixed_vector() {
        let v = [-1.0, 2.0, 3.0];
        assert_eq!(positive_part_norm(&v, Norm::L1), 5.0);
        assert_eq!(positive_part_norm(&v, Norm::L2), 13.0_f64.sqrt());
        assert_eq!(positive_part_norm(&v, Norm::Inf), 3.0);
        assert_eq!(positive_part_norm(&[-1.0, 0.0], Norm::L2), 0.0);
    }

    #[test]
    fn unsupported_norm() {
        assert!(matches!(Norm::from_q(3.0), Err(Error::UnsupportedNorm(_))));
        assert!(matches!(
            "p".parse::<Norm>(),
            Err(Error::UnsupportedNorm(_))
        ));
        assert_eq!(Norm::from_q(f64::INFINITY).unwrap(), Norm::Inf);
    }

    #[test]
    fn slater_point_is_validated() {
        let bad = SlaterPoint {
            point: vec![0.5, 0.0],
            margin: 1.0,
        };
        let err = ConstrainedProblem::new(
            2,
            vec![half_norm_sq(2)],
            ProximalTerm::Zero,
            vec![neg_coord(2, 0)],
            1.0,
            Some(bad),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidParameter {
                name: "slater_point",
                ..
            }
        ));
    }

    #[test]
    fn box_prox_clamps_and_zero_prox_is_identity() {
        let b = ProximalTerm::Box {
            lower: -1.0,
            upper: 1.0,
        };
        assert_eq!(b.prox(&[-3.0, 0.5, 2.0], 0.1), vec![-1.0, 0.5, 1.0]);
        assert_eq!(b.value(&[2.0]), f64::INFINITY);
        let x = [0.1, -7.25, 1e300];
        assert_eq!(ProximalTerm::Zero.prox(&x, 3.0), x.to_vec());
    }

    #[test]
    fn linear_growth_ratio_is_exactly_one() {
        let a = vec![3.0, -4.0];
        let c = Constraint::new(Arc::new(Affine::new(a, 1.0)), 0.0, 25.0, 0.0).unwrap();
        let samples = vec![vec![0.0, 0.0], vec![10.0, -3.0], vec![-1.0, 2.0]];
        let audit = audit_growth_condition(&c, &samples).unwrap();
        assert_eq!(audit.max_ratio, 1.0);
        assert!(audit.violating_points.is_empty());
    }

    #[test]
    fn empty_sample_set_is_rejected() {
        let c = neg_coord(2, 0);
        assert!(audit_growth_condition(&c, &[]).is_err());
    }

    #[test]
    fn constraint_metadata_validation() {
        let f: Arc<dyn SmoothFunction> = Arc::new(Affine::new(vec![1.0], 0.0));
        assert!(Constraint::new(f.clone(), 0.0, 0.0, 0.0).is_err());
        assert!(Constraint::new(f.clone(), -1.0, 1.0, 0.0).is_err());
        assert!(Constraint::new(f, 0.0, 1.0, -0.5).is_err());
    }
}

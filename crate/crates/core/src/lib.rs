//! Softplus penalty reformulation of smooth-constrained convex problems.
//!
//! A problem `min F(x) s.t. a_i(x) <= 0` is replaced by the unconstrained
//! composite problem `min F(x) + ξ Σ p_δ(a_i(x))` with the softplus penalty
//! `p_δ(t) = δ log(1 + exp(t/δ))`. The crate provides the problem model, the
//! penalty oracle, first-order solvers (accelerated proximal gradient,
//! proximal SVRG, catalyst), the `(ξ, δ)` schedules with certification of the
//! returned point, and a zoo of instances with known solutions.

pub mod diagnostics;
pub mod driver;
pub mod error;
pub mod functions;
pub mod model;
pub mod schema;
pub mod softplus;
pub mod solvers;
pub mod zoo;

mod vecops;

pub use driver::{solve_constrained, Certificate, SolveOptions, SolverChoice};
pub use error::{Error, Result};
pub use functions::{Affine, FnFunction, Quadratic, SmoothFunction};
pub use model::{
    audit_growth_condition, positive_part_norm, ConstrainedProblem, Constraint, GrowthAudit, Norm,
    ProximalTerm, ReferenceSolution, SlaterPoint, SmoothComponent,
};
pub use softplus::{
    penalty_smoothness_bound, softplus, softplus_deriv, softplus_second_deriv, DeltaProvenance,
    PenalizedOracle, PenaltyConfig,
};

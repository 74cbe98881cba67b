//! Fixtures shared by integration tests.

#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use softpen::{Affine, ConstrainedProblem, Constraint, ProximalTerm, Quadratic, SmoothComponent};

/// Least squares with `n` rotated rank-one components whose curvatures are
/// log-spaced in `[1/condition, 1]`, plus one loose linear constraint.
///
/// The declared `μ` is the exact smallest Hessian eigenvalue, so the
/// conditioning seen by the solvers matches the worst case.
pub fn ill_conditioned_least_squares(seed: u64, n: usize, condition: f64) -> ConstrainedProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let mut components = Vec::with_capacity(n);
    for i in 0..n {
        let s = condition.powf(-(i as f64) / (n - 1) as f64);
        let a = q.row(i).transpose() * s.sqrt();
        let b: f64 = rng.sample(StandardNormal);
        let f = Quadratic::new(&a * a.transpose(), -&a * b, 0.5 * b * b).unwrap();
        components.push(SmoothComponent::new(Arc::new(f), s).unwrap());
    }
    let mu = 1.0 / (condition * n as f64);
    let mut a = vec![0.0; n];
    a[0] = 0.1;
    let constraint = Constraint::new(Arc::new(Affine::new(a, 0.2)), 0.0, 0.01, 0.0).unwrap();
    ConstrainedProblem::new(
        n,
        components,
        ProximalTerm::Zero,
        vec![constraint],
        mu,
        None,
    )
    .unwrap()
}

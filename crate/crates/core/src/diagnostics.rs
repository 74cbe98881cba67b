//! Finite-difference and sampled-Lipschitz audits used to check oracle metadata.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::vecops;

/// Central-difference step `1e-6 · (1 + ‖x‖∞)`.
pub fn fd_step(x: &[f64]) -> f64 {
    1e-6 * (1.0 + vecops::norm_inf(x))
}

pub fn central_difference_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = fd_step(x);
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = probe[i];
            probe[i] = xi + h;
            let fp = f(&probe);
            probe[i] = xi - h;
            let fm = f(&probe);
            probe[i] = xi;
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

/// `‖analytic − reference‖∞ / max(1, ‖reference‖∞)`
pub fn relative_error(analytic: &[f64], reference: &[f64]) -> f64 {
    let diff = vecops::norm_inf(&vecops::sub(analytic, reference));
    diff / vecops::norm_inf(reference).max(1.0)
}

/// Relative disagreement between `gradient(x)` and central differences of `value`.
pub fn gradient_error(
    value: impl Fn(&[f64]) -> f64,
    gradient: impl Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
) -> f64 {
    let fd = central_difference_gradient(value, x);
    relative_error(&gradient(x), &fd)
}

/// Largest `‖∇f(x) − ∇f(y)‖₂ / ‖x − y‖₂` over the given pairs.
pub fn empirical_lipschitz(
    gradient: impl Fn(&[f64]) -> Vec<f64>,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> f64 {
    pairs
        .iter()
        .filter_map(|(x, y)| {
            let d = vecops::dist2(x, y);
            (d > 0.0).then(|| vecops::dist2(&gradient(x), &gradient(y)) / d)
        })
        .fold(0.0, f64::max)
}

/// Gaussian points `center + scale · N(0, I)`.
pub fn gaussian_points(
    rng: &mut impl Rng,
    center: &[f64],
    scale: f64,
    count: usize,
) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            center
                .iter()
                .map(|c| c + scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

/// Pairs `(x, x + r·u)` with `x` Gaussian around `center` and random
/// separations spanning several orders of magnitude.
pub fn gaussian_pairs(
    rng: &mut impl Rng,
    center: &[f64],
    scale: f64,
    count: usize,
) -> Vec<(Vec<f64>, Vec<f64>)> {
    gaussian_points(rng, center, scale, count)
        .into_iter()
        .map(|x| {
            let radius = scale * 10f64.powf(rng.gen_range(-4.0..0.0));
            let y = x
                .iter()
                .map(|v| v + radius * rng.sample::<f64, _>(StandardNormal))
                .collect();
            (x, y)
        })
        .collect()
}

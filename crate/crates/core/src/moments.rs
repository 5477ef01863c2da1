//! Maxwellians, Hermite moment extraction and the Grad expansion.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hermite::{factorial, hermite_all};
use crate::kinetic::VelocityGrid;
use crate::state::PrimitiveMomentState;

/// `rho / sqrt(2 pi theta) * exp(-(v - u)^2 / (2 theta))`.
pub fn maxwellian(rho: f64, u: f64, theta: f64, v: f64) -> f64 {
    let d = v - u;
    rho / (2.0 * PI * theta).sqrt() * (-d * d / (2.0 * theta)).exp()
}

/// Conserved quantities `(rho, rho u, E)` of a distribution sampled on `grid`.
pub fn conserved_moments(values: &[f64], grid: &VelocityGrid) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for ((f, v), w) in values.iter().zip(&grid.nodes).zip(&grid.weights) {
        let fw = f * w;
        acc[0] += fw;
        acc[1] += fw * v;
        acc[2] += 0.5 * fw * v * v;
    }
    acc
}

/// `(rho, u, theta)` of a sampled distribution.
pub fn macroscopic(values: &[f64], grid: &VelocityGrid) -> Result<(f64, f64, f64)> {
    let [rho, m, e] = conserved_moments(values, grid);
    if !(rho > 0.0) {
        return Err(Error::DegenerateDistribution { rho, theta: f64::NAN });
    }
    let u = m / rho;
    let theta = 2.0 * e / rho - u * u;
    if !(theta > 0.0) {
        return Err(Error::DegenerateDistribution { rho, theta });
    }
    Ok((rho, u, theta))
}

/// Projects a sampled distribution onto the Grad expansion.
///
/// `rho, u, theta` come from the first three velocity integrals and
/// `f_k = theta^{k/2} / k! * int f He_k((v - u)/sqrt(theta)) dv` for
/// `3 <= k <= order`. Pass `order = M + 1` to keep the closing moment.
pub fn moments_from_distribution(
    values: &[f64],
    grid: &VelocityGrid,
    order: usize,
) -> Result<PrimitiveMomentState> {
    if values.len() != grid.len() {
        return Err(Error::Dimension(format!(
            "distribution has {} samples, grid has {}",
            values.len(),
            grid.len()
        )));
    }
    let (rho, u, theta) = macroscopic(values, grid)?;
    let f = hermite_projections(values, grid, u, theta, order);
    PrimitiveMomentState::new(rho, u, theta, f[3..].to_vec())
}

/// `theta^{k/2}/k! * int f He_k(z) dv` for `k = 0..=order`.
pub fn hermite_projections(
    values: &[f64],
    grid: &VelocityGrid,
    u: f64,
    theta: f64,
    order: usize,
) -> Vec<f64> {
    let sqrt_theta = theta.sqrt();
    let mut acc = vec![0.0; order + 1];
    for ((f, v), w) in values.iter().zip(&grid.nodes).zip(&grid.weights) {
        let fw = f * w;
        if fw == 0.0 {
            continue;
        }
        let he = hermite_all(order, (v - u) / sqrt_theta);
        for (a, h) in acc.iter_mut().zip(&he) {
            *a += fw * h;
        }
    }
    let mut scale = 1.0;
    for (k, a) in acc.iter_mut().enumerate() {
        if k > 0 {
            scale *= sqrt_theta / k as f64;
        }
        *a *= scale;
    }
    acc
}

/// Truncated Grad expansion
/// `f(v) = sum_k theta^{-(k+1)/2} He_k(z) exp(-z^2/2) f_k / sqrt(2 pi)`.
pub fn distribution_from_moments(w: &PrimitiveMomentState, v: f64) -> f64 {
    let order = w.order();
    let sqrt_theta = w.theta.sqrt();
    let z = (v - w.u) / sqrt_theta;
    let he = hermite_all(order, z);
    let gauss = (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
    let mut sum = 0.0;
    let mut scale = 1.0 / sqrt_theta;
    for (k, h) in he.iter().enumerate() {
        sum += scale * h * w.moment(k as isize);
        scale /= sqrt_theta;
    }
    sum * gauss
}

/// `theta^{k/2} / k!`, the normalisation linking `f_k` to Hermite integrals.
pub fn moment_normalisation(theta: f64, k: usize) -> f64 {
    theta.powf(0.5 * k as f64) / factorial(k)
}

//! Closure networks with analytically chosen weights.
//!
//! These need no training and are used to exercise the runtime end to end:
//! a constant head that reproduces fixed offsets, a piecewise-linear
//! interpolant of the HME offsets `sqrt(theta) * roots(He_{M+1})` in
//! `theta`, and plain affine maps for the gradient-coefficient variant.

use crate::closure::EigenOffsets;
use crate::error::Result;
use crate::hermite::hermite_roots;
use crate::network::{
    feature_count, softplus_inverse, Activation, ClosureRuntimeConfig, Layer, MlClosure,
    NetworkWeights,
};

/// Raw outputs that the ordering head maps back onto `offsets`.
pub fn raw_for_offsets(offsets: &[f64], eps_gap: f64) -> Result<Vec<f64>> {
    EigenOffsets::new(offsets.to_vec(), eps_gap)?;
    let mut raw = Vec::with_capacity(offsets.len());
    raw.push(offsets[0]);
    for p in offsets.windows(2) {
        raw.push(softplus_inverse(p[1] - p[0] - eps_gap));
    }
    Ok(raw)
}

/// HME offsets at temperature `theta`.
pub fn hme_offsets(order: usize, theta: f64) -> Vec<f64> {
    hermite_roots(order + 1).iter().map(|r| r * theta.sqrt()).collect()
}

/// A single affine layer `raw = W x + b` on the standardized features.
pub fn affine_network(
    order: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
    eps_gap: f64,
) -> Result<MlClosure> {
    let layer = Layer::linear(feature_count(order), order + 1, weights, bias);
    MlClosure::new(
        NetworkWeights::new(vec![layer])?,
        ClosureRuntimeConfig::unscaled(order, eps_gap),
    )
}

/// Network whose output ignores its input and yields `offsets`.
pub fn constant_offsets_network(order: usize, offsets: &[f64], eps_gap: f64) -> Result<MlClosure> {
    let raw = raw_for_offsets(offsets, eps_gap)?;
    affine_network(order, vec![0.0; feature_count(order) * (order + 1)], raw, eps_gap)
}

/// Reproduces HME exactly at the single temperature `theta`.
pub fn constant_hme_network(order: usize, theta: f64, eps_gap: f64) -> Result<MlClosure> {
    constant_offsets_network(order, &hme_offsets(order, theta), eps_gap)
}

/// Piecewise-linear interpolant in `theta` of `target(theta)` (raw outputs)
/// through `knots`; constant below the first knot and linearly extrapolated
/// above the last one.
///
/// Hidden unit `i` is `relu(theta - t_i)`, and the output layer sums them
/// with the slope increments.
pub fn piecewise_linear_in_theta(
    order: usize,
    knots: &[f64],
    eps_gap: f64,
    target: impl Fn(f64) -> Result<Vec<f64>>,
) -> Result<MlClosure> {
    assert!(knots.len() >= 2 && knots.windows(2).all(|p| p[1] > p[0]), "knots must increase");
    let n_in = feature_count(order);
    let n_out = order + 1;
    let n_hidden = knots.len() - 1;

    let mut w0 = vec![0.0; n_hidden * n_in];
    for i in 0..n_hidden {
        w0[i * n_in + 1] = 1.0; // theta is the second feature
    }
    let b0: Vec<f64> = knots[..n_hidden].iter().map(|t| -t).collect();
    let hidden = Layer::linear(n_in, n_hidden, w0, b0).with_activation(Activation::Relu);

    let values: Vec<Vec<f64>> = knots.iter().map(|&t| target(t)).collect::<Result<_>>()?;
    let mut w1 = vec![0.0; n_out * n_hidden];
    for k in 0..n_out {
        let mut prev_slope = 0.0;
        for i in 0..n_hidden {
            let slope = (values[i + 1][k] - values[i][k]) / (knots[i + 1] - knots[i]);
            w1[k * n_hidden + i] = slope - prev_slope;
            prev_slope = slope;
        }
    }
    let out = Layer::linear(n_hidden, n_out, w1, values[0].clone());
    MlClosure::new(
        NetworkWeights::new(vec![hidden, out])?,
        ClosureRuntimeConfig::unscaled(order, eps_gap),
    )
}

/// Piecewise-linear approximation of HME on `theta in [knots[0], ...]`.
pub fn hme_interpolating_network(order: usize, knots: &[f64], eps_gap: f64) -> Result<MlClosure> {
    piecewise_linear_in_theta(order, knots, eps_gap, |t| {
        raw_for_offsets(&hme_offsets(order, t), eps_gap)
    })
}

/// `n` uniformly spaced knots on `[lo, hi]`.
pub fn uniform_knots(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

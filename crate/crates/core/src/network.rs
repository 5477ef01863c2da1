//! Closure network runtime: the MLCW weight format, inference-mode forward
//! pass and the eigenvalue head.
//!
//! The network sees the standardized features `(rho, theta, f_3, ..., f_M)`.
//! `u` is deliberately left out so that the predicted offsets, and with them
//! every entry of the last row except `a_M - u`, are Galilean invariant by
//! construction.

use std::io::{Read, Write};

use crate::closure::{
    assemble_ml_matrix, last_row_from_eigenvalues, last_row_from_grad_coeffs, EigenOffsets,
    LastRow, DEFAULT_EPS_GAP,
};
use crate::codec::{Reader, Writer};
use crate::error::{Error, FormatError, Result};
use crate::matrix::SystemMatrix;
use crate::state::{PrimitiveMomentState, MIN_ORDER};

pub mod analytic;

const MAGIC: &[u8; 4] = b"MLCW";
const VERSION: u32 = 1;
/// Tolerance used when checking golden vectors at load time.
pub const GOLDEN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    fn tag(self) -> u8 {
        match self {
            Activation::Identity => 0,
            Activation::Relu => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self, FormatError> {
        match tag {
            0 => Ok(Activation::Identity),
            1 => Ok(Activation::Relu),
            t => Err(FormatError::Invalid(format!("activation tag {t}"))),
        }
    }
}

/// Inference-mode batch normalization `gamma (x - mean)/sqrt(var + eps) + beta`.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub eps: f64,
}

impl BatchNorm {
    pub fn identity(width: usize) -> Self {
        Self {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            mean: vec![0.0; width],
            var: vec![1.0; width],
            eps: 0.0,
        }
    }
}

/// `activation(norm(W x + b))`, with `W` stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub norm: Option<BatchNorm>,
    pub activation: Activation,
}

impl Layer {
    pub fn linear(inputs: usize, outputs: usize, weights: Vec<f64>, bias: Vec<f64>) -> Self {
        Self { inputs, outputs, weights, bias, norm: None, activation: Activation::Identity }
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_norm(mut self, norm: BatchNorm) -> Self {
        self.norm = Some(norm);
        self
    }

    fn validate(&self, index: usize) -> Result<(), FormatError> {
        let dim = |what: &str| {
            FormatError::Dimension(format!("layer {index}: {what} has the wrong length"))
        };
        if self.inputs == 0 || self.outputs == 0 {
            return Err(FormatError::Dimension(format!("layer {index} has zero width")));
        }
        if self.weights.len() != self.inputs * self.outputs {
            return Err(dim("weight matrix"));
        }
        if self.bias.len() != self.outputs {
            return Err(dim("bias"));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if !finite(&self.weights) || !finite(&self.bias) {
            return Err(FormatError::NonFinite("layer parameters"));
        }
        if let Some(bn) = &self.norm {
            for v in [&bn.gamma, &bn.beta, &bn.mean, &bn.var] {
                if v.len() != self.outputs {
                    return Err(dim("batch-norm parameter"));
                }
                if !finite(v) {
                    return Err(FormatError::NonFinite("batch-norm parameters"));
                }
            }
            if !(bn.eps >= 0.0) || !bn.eps.is_finite() {
                return Err(FormatError::Invalid(format!("layer {index}: batch-norm epsilon")));
            }
            if bn.var.iter().any(|&v| !(v > 0.0)) {
                return Err(FormatError::Invalid(format!(
                    "layer {index}: running variance must be positive"
                )));
            }
        }
        Ok(())
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.inputs).zip(&self.bias) {
            out.push(row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b);
        }
        if let Some(bn) = &self.norm {
            for (k, y) in out.iter_mut().enumerate() {
                *y = bn.gamma[k] * (*y - bn.mean[k]) / (bn.var[k] + bn.eps).sqrt() + bn.beta[k];
            }
        }
        if self.activation == Activation::Relu {
            for y in out.iter_mut() {
                *y = y.max(0.0);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkWeights {
    pub layers: Vec<Layer>,
}

impl NetworkWeights {
    pub fn new(layers: Vec<Layer>) -> Result<Self, FormatError> {
        let net = Self { layers };
        net.validate()?;
        Ok(net)
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        if self.layers.is_empty() {
            return Err(FormatError::Dimension("network has no layers".into()));
        }
        for (i, layer) in self.layers.iter().enumerate() {
            layer.validate(i)?;
            if i > 0 && self.layers[i - 1].outputs != layer.inputs {
                return Err(FormatError::Dimension(format!(
                    "layer {} outputs {} but layer {i} expects {}",
                    i - 1,
                    self.layers[i - 1].outputs,
                    layer.inputs
                )));
            }
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }
}

/// Inference-mode evaluation.
pub fn forward(weights: &NetworkWeights, input: &[f64]) -> Result<Vec<f64>> {
    if input.len() != weights.input_width() {
        return Err(Error::Dimension(format!(
            "network expects {} inputs, got {}",
            weights.input_width(),
            input.len()
        )));
    }
    let mut x = input.to_vec();
    let mut y = Vec::new();
    for (i, layer) in weights.layers.iter().enumerate() {
        layer.apply(&x, &mut y);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Inference { layer: i });
        }
        std::mem::swap(&mut x, &mut y);
    }
    Ok(x)
}

/// Order, gap and feature standardization stored alongside the weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosureRuntimeConfig {
    pub order: usize,
    pub eps_gap: f64,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
}

impl ClosureRuntimeConfig {
    /// Identity standardization for order `order`.
    pub fn unscaled(order: usize, eps_gap: f64) -> Self {
        let n = feature_count(order);
        Self { order, eps_gap, feature_means: vec![0.0; n], feature_scales: vec![1.0; n] }
    }

    pub fn validate(&self) -> Result<(), FormatError> {
        if self.order < MIN_ORDER {
            return Err(FormatError::Invalid(format!("order {} below {MIN_ORDER}", self.order)));
        }
        if !(self.eps_gap > 0.0) || !self.eps_gap.is_finite() {
            return Err(FormatError::Invalid("eps_gap must be positive".into()));
        }
        let n = feature_count(self.order);
        if self.feature_means.len() != n || self.feature_scales.len() != n {
            return Err(FormatError::Dimension(format!("expected {n} feature constants")));
        }
        if self.feature_scales.iter().any(|s| !(*s > 0.0) || !s.is_finite())
            || self.feature_means.iter().any(|m| !m.is_finite())
        {
            return Err(FormatError::Invalid("feature scales must be positive".into()));
        }
        Ok(())
    }
}

/// Number of network inputs for order `order`: `rho, theta, f_3..f_M`.
pub fn feature_count(order: usize) -> usize {
    order
}

/// Raw (unstandardized) features `(rho, theta, f_3, ..., f_M)`.
pub fn physical_features(w: &PrimitiveMomentState) -> Vec<f64> {
    let mut x = Vec::with_capacity(feature_count(w.order()));
    x.push(w.rho);
    x.push(w.theta);
    x.extend_from_slice(&w.f);
    x
}

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp()
    } else {
        x.exp().ln_1p()
    }
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn softplus_inverse(y: f64) -> f64 {
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

/// Ordering head: `r~_0 = raw_0`, `r~_k = r~_{k-1} + softplus(raw_k) + eps_gap`.
pub fn eigen_offsets_from_raw(raw: &[f64], eps_gap: f64) -> Result<EigenOffsets> {
    let mut values = Vec::with_capacity(raw.len());
    let mut acc = raw[0];
    values.push(acc);
    for r in &raw[1..] {
        acc += softplus(*r) + eps_gap;
        values.push(acc);
    }
    EigenOffsets::new(values, 0.0)
}

/// A golden input/output pair: physical features and the raw network output.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenVector {
    pub input: Vec<f64>,
    pub output: Vec<f64>,
}

/// Loaded network together with its runtime configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MlClosure {
    pub weights: NetworkWeights,
    pub config: ClosureRuntimeConfig,
    pub golden: Vec<GoldenVector>,
}

impl MlClosure {
    pub fn new(weights: NetworkWeights, config: ClosureRuntimeConfig) -> Result<Self> {
        weights.validate()?;
        config.validate()?;
        if weights.input_width() != feature_count(config.order) {
            return Err(FormatError::Dimension(format!(
                "network has {} inputs, order {} needs {}",
                weights.input_width(),
                config.order,
                feature_count(config.order)
            ))
            .into());
        }
        if weights.output_width() != config.order + 1 {
            return Err(FormatError::Dimension(format!(
                "network has {} outputs, order {} needs {}",
                weights.output_width(),
                config.order,
                config.order + 1
            ))
            .into());
        }
        Ok(Self { weights, config, golden: Vec::new() })
    }

    pub fn order(&self) -> usize {
        self.config.order
    }

    /// Raw output for physical features (standardization applied here).
    pub fn raw_from_features(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.config.feature_means.len() {
            return Err(Error::Dimension("feature vector length".into()));
        }
        let x: Vec<f64> = features
            .iter()
            .zip(&self.config.feature_means)
            .zip(&self.config.feature_scales)
            .map(|((v, m), s)| (v - m) / s)
            .collect();
        forward(&self.weights, &x)
    }

    pub fn raw_output(&self, w: &PrimitiveMomentState) -> Result<Vec<f64>> {
        self.check_order(w)?;
        self.raw_from_features(&physical_features(w))
    }

    pub fn offsets(&self, w: &PrimitiveMomentState) -> Result<EigenOffsets> {
        eigen_offsets_from_raw(&self.raw_output(w)?, self.config.eps_gap)
    }

    /// Hyperbolic last row: eigenvalues `u + r~_k`.
    pub fn last_row(&self, w: &PrimitiveMomentState) -> Result<LastRow> {
        last_row_from_eigenvalues(&self.offsets(w)?, w)
    }

    pub fn matrix(&self, w: &PrimitiveMomentState) -> Result<SystemMatrix> {
        assemble_ml_matrix(w, &self.last_row(w)?)
    }

    /// Non-hyperbolic variant: the raw outputs are read directly as the
    /// gradient coefficients `N_0..N_M`, bypassing the eigenvalue head.
    pub fn gradient_coefficient_row(&self, w: &PrimitiveMomentState) -> Result<LastRow> {
        last_row_from_grad_coeffs(&self.raw_output(w)?, w)
    }

    pub fn gradient_coefficient_matrix(&self, w: &PrimitiveMomentState) -> Result<SystemMatrix> {
        assemble_ml_matrix(w, &self.gradient_coefficient_row(w)?)
    }

    /// Records golden vectors for the given physical inputs.
    pub fn record_golden(&mut self, inputs: Vec<Vec<f64>>) -> Result<()> {
        self.golden = inputs
            .into_iter()
            .map(|input| {
                let output = self.raw_from_features(&input)?;
                Ok(GoldenVector { input, output })
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    /// Checks every stored golden vector to absolute tolerance `tol`.
    pub fn verify_golden(&self, tol: f64) -> Result<()> {
        for (index, g) in self.golden.iter().enumerate() {
            let got = self.raw_from_features(&g.input)?;
            let deviation = got
                .iter()
                .zip(&g.output)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if !(deviation <= tol) || got.len() != g.output.len() {
                return Err(FormatError::Golden { index, deviation }.into());
            }
        }
        Ok(())
    }

    fn check_order(&self, w: &PrimitiveMomentState) -> Result<()> {
        if w.order() != self.config.order {
            return Err(Error::Dimension(format!(
                "closure of order {} applied to a state of order {}",
                self.config.order,
                w.order()
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut w = Writer::new(MAGIC, VERSION);
        w.len_u32(c.order);
        w.f64(c.eps_gap);
        w.len_u32(c.feature_means.len());
        w.f64s(&c.feature_means);
        w.f64s(&c.feature_scales);
        w.len_u32(self.weights.layers.len());
        for layer in &self.weights.layers {
            w.len_u32(layer.inputs);
            w.len_u32(layer.outputs);
            w.u8(layer.norm.is_some() as u8);
            w.u8(layer.activation.tag());
            w.f64s(&layer.weights);
            w.f64s(&layer.bias);
            if let Some(bn) = &layer.norm {
                w.f64s(&bn.gamma);
                w.f64s(&bn.beta);
                w.f64s(&bn.mean);
                w.f64s(&bn.var);
                w.f64(bn.eps);
            }
        }
        w.len_u32(self.golden.len());
        for g in &self.golden {
            w.f64s(&g.input);
            w.f64s(&g.output);
        }
        w.finish()
    }

    /// Parses and validates an MLCW image, then checks its golden vectors.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (mut r, crc) = Reader::open(bytes, MAGIC, VERSION)?;
        let order = r.u32("order")? as usize;
        let eps_gap = r.finite("eps_gap")?;
        let n_features = r.u32("feature count")? as usize;
        let feature_means = r.finite_vec(n_features, "feature means")?;
        let feature_scales = r.finite_vec(n_features, "feature scales")?;
        let n_layers = r.u32("layer count")? as usize;
        let mut layers = Vec::new();
        for _ in 0..n_layers {
            let inputs = r.u32("layer inputs")? as usize;
            let outputs = r.u32("layer outputs")? as usize;
            let has_norm = match r.u8("norm flag")? {
                0 => false,
                1 => true,
                t => return Err(FormatError::Invalid(format!("norm flag {t}")).into()),
            };
            let activation = Activation::from_tag(r.u8("activation")?)?;
            let weights = r.finite_vec(inputs.saturating_mul(outputs), "weights")?;
            let bias = r.finite_vec(outputs, "bias")?;
            let norm = if has_norm {
                Some(BatchNorm {
                    gamma: r.finite_vec(outputs, "batch-norm gamma")?,
                    beta: r.finite_vec(outputs, "batch-norm beta")?,
                    mean: r.finite_vec(outputs, "batch-norm mean")?,
                    var: r.finite_vec(outputs, "batch-norm variance")?,
                    eps: r.finite("batch-norm epsilon")?,
                })
            } else {
                None
            };
            layers.push(Layer { inputs, outputs, weights, bias, norm, activation });
        }
        let n_golden = r.u32("golden count")? as usize;
        let mut golden = Vec::new();
        for _ in 0..n_golden {
            let input = r.finite_vec(n_features, "golden input")?;
            let output = r.finite_vec(order + 1, "golden output")?;
            golden.push(GoldenVector { input, output });
        }
        r.finish(crc)?;

        let config = ClosureRuntimeConfig { order, eps_gap, feature_means, feature_scales };
        let mut closure = Self::new(NetworkWeights::new(layers)?, config)?;
        closure.golden = golden;
        closure.verify_golden(GOLDEN_TOLERANCE)?;
        Ok(closure)
    }
}

/// Reads an MLCW stream.
pub fn load_weights(mut stream: impl Read) -> Result<MlClosure> {
    let mut bytes = Vec::new();
    stream.read_to_end(&mut bytes)?;
    MlClosure::from_bytes(&bytes)
}

/// Writes an MLCW stream.
pub fn save_weights(closure: &MlClosure, mut stream: impl Write) -> Result<()> {
    stream.write_all(&closure.to_bytes())?;
    Ok(())
}

/// Default `eps_gap` for newly built closures.
pub fn default_config(order: usize) -> ClosureRuntimeConfig {
    ClosureRuntimeConfig::unscaled(order, DEFAULT_EPS_GAP)
}

//! Dense feed-forward networks with hand-written backprop.
//!
//! Weights are stored flat and row-major: `weights[o * in_dim + i]` connects
//! input `i` to output `o`. That is also the on-disk JSON layout.

use serde::{Deserialize, Serialize};

use super::PerceptionError;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn out_dim(&self) -> usize {
        self.biases.len()
    }

    pub fn in_dim(&self) -> usize {
        if self.biases.is_empty() {
            0
        } else {
            self.weights.len() / self.biases.len()
        }
    }
}

/// Parameters of a small dense network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub layer_dims: Vec<usize>,
    pub layers: Vec<Layer>,
}

/// Per-layer values kept from a forward pass for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[l]` is what layer `l` saw; `inputs[n]` is the network output.
    pub inputs: Vec<Vec<f64>>,
    pub pre_activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Gradient with the same layout as [`EncoderParams::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &EncoderParams) -> Self {
        Self {
            weights: params.layers.iter().map(|l| vec![0.0; l.weights.len()]).collect(),
            biases: params.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += scale * y);
        }
    }

    /// Flattened in parameter order (layer by layer, weights then biases).
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

impl EncoderParams {
    /// Builds params from explicit layers, checking shapes and finiteness.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self, PerceptionError> {
        let first = layers
            .first()
            .ok_or_else(|| PerceptionError::InvalidParams("network has no layers".into()))?;
        let mut dims = vec![first.in_dim()];
        dims.extend(layers.iter().map(Layer::out_dim));
        let params = Self {
            layer_dims: dims,
            layers,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), PerceptionError> {
        if self.layers.is_empty() || self.layer_dims.len() != self.layers.len() + 1 {
            return Err(PerceptionError::InvalidParams(format!(
                "{} layer dims for {} layers",
                self.layer_dims.len(),
                self.layers.len()
            )));
        }
        if self.layer_dims.contains(&0) {
            return Err(PerceptionError::InvalidParams("zero-width layer".into()));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let (i, o) = (self.layer_dims[l], self.layer_dims[l + 1]);
            if layer.weights.len() != i * o || layer.biases.len() != o {
                return Err(PerceptionError::InvalidParams(format!(
                    "layer {l}: expected {o}x{i} weights and {o} biases, got {} and {}",
                    layer.weights.len(),
                    layer.biases.len()
                )));
            }
            if layer.weights.iter().chain(&layer.biases).any(|v| !v.is_finite()) {
                return Err(PerceptionError::InvalidParams(format!(
                    "layer {l} has non-finite parameters"
                )));
            }
        }
        Ok(())
    }

    /// Uniform init in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
    pub fn init(
        layer_dims: &[usize],
        activations: &[Activation],
        rng: &mut RngStream,
    ) -> Result<Self, PerceptionError> {
        Self::shape_check(layer_dims, activations)?;
        let layers = layer_dims
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                Layer {
                    weights: (0..w[0] * w[1]).map(|_| rng.uniform(-bound, bound)).collect(),
                    biases: vec![0.0; w[1]],
                    activation,
                }
            })
            .collect();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
        })
    }

    pub fn zeros(layer_dims: &[usize], activations: &[Activation]) -> Result<Self, PerceptionError> {
        Self::shape_check(layer_dims, activations)?;
        let layers = layer_dims
            .windows(2)
            .zip(activations)
            .map(|(w, &activation)| Layer {
                weights: vec![0.0; w[0] * w[1]],
                biases: vec![0.0; w[1]],
                activation,
            })
            .collect();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
        })
    }

    /// Single linear layer with identity weights.
    pub fn identity(dim: usize) -> Self {
        let mut weights = vec![0.0; dim * dim];
        for i in 0..dim {
            weights[i * dim + i] = 1.0;
        }
        Self {
            layer_dims: vec![dim, dim],
            layers: vec![Layer {
                weights,
                biases: vec![0.0; dim],
                activation: Activation::Identity,
            }],
        }
    }

    fn shape_check(layer_dims: &[usize], activations: &[Activation]) -> Result<(), PerceptionError> {
        if layer_dims.len() < 2 || activations.len() != layer_dims.len() - 1 {
            return Err(PerceptionError::InvalidParams(format!(
                "{} dims need {} activations, got {}",
                layer_dims.len(),
                layer_dims.len().saturating_sub(1),
                activations.len()
            )));
        }
        if layer_dims.contains(&0) {
            return Err(PerceptionError::InvalidParams("zero-width layer".into()));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("validated params have dims")
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, PerceptionError> {
        Ok(self.forward_cached(x)?.inputs.pop().unwrap_or_default())
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache, PerceptionError> {
        if x.len() != self.input_dim() {
            return Err(PerceptionError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        inputs.push(x.to_vec());
        for layer in &self.layers {
            let input = inputs.last().expect("seeded with x");
            let n_in = input.len();
            let z: Vec<f64> = layer
                .biases
                .iter()
                .enumerate()
                .map(|(o, b)| {
                    let row = &layer.weights[o * n_in..(o + 1) * n_in];
                    b + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>()
                })
                .collect();
            let a = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre_activations.push(z);
            inputs.push(a);
        }
        Ok(ForwardCache {
            inputs,
            pre_activations,
        })
    }

    /// Backpropagates `d_output` (dL/d output) through a cached pass.
    /// Returns parameter gradients and dL/d input.
    pub fn backward(&self, cache: &ForwardCache, d_output: &[f64]) -> (Gradients, Vec<f64>) {
        let mut grads = Gradients::zeros_like(self);
        let mut delta_out = d_output.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.inputs[l];
            let output = &cache.inputs[l + 1];
            let z = &cache.pre_activations[l];
            let n_in = input.len();
            let delta: Vec<f64> = delta_out
                .iter()
                .enumerate()
                .map(|(o, d)| d * layer.activation.derivative(z[o], output[o]))
                .collect();
            let mut d_input = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                grads.biases[l][o] = d;
                let row = &layer.weights[o * n_in..(o + 1) * n_in];
                let grow = &mut grads.weights[l][o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    grow[i] = d * input[i];
                    d_input[i] += d * row[i];
                }
            }
            delta_out = d_input;
        }
        (grads, delta_out)
    }

    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            layer
                .weights
                .iter_mut()
                .zip(&grads.weights[l])
                .for_each(|(w, g)| *w -= learning_rate * g);
            layer
                .biases
                .iter_mut()
                .zip(&grads.biases[l])
                .for_each(|(b, g)| *b -= learning_rate * g);
        }
    }

    /// Mutable view over every scalar parameter, in [`Gradients::flatten`] order.
    pub(crate) fn param_mut(&mut self, index: usize) -> &mut f64 {
        let mut idx = index;
        for layer in &mut self.layers {
            if idx < layer.weights.len() {
                return &mut layer.weights[idx];
            }
            idx -= layer.weights.len();
            if idx < layer.biases.len() {
                return &mut layer.biases[idx];
            }
            idx -= layer.biases.len();
        }
        panic!("parameter index {index} out of range");
    }

    /// Outputs of every layer for input `x` (input first, output last).
    pub fn layer_activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, PerceptionError> {
        Ok(self.forward_cached(x)?.inputs)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("params always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, PerceptionError> {
        let p: Self = serde_json::from_str(s)
            .map_err(|e| PerceptionError::InvalidParams(format!("bad params JSON: {e}")))?;
        p.validate()?;
        Ok(p)
    }
}

/// Per-sample loss functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    /// Mean over outputs of `(y - t)^2`.
    #[default]
    Mse,
    /// Mean over outputs of binary cross-entropy on logits `y`, targets in `[0, 1]`.
    Logistic,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl Loss {
    pub fn value(self, output: &[f64], target: &[f64]) -> f64 {
        let m = output.len() as f64;
        match self {
            Loss::Mse => output.iter().zip(target).map(|(y, t)| (y - t).powi(2)).sum::<f64>() / m,
            Loss::Logistic => {
                output.iter().zip(target).map(|(&y, &t)| softplus(y) - t * y).sum::<f64>() / m
            }
        }
    }

    pub fn gradient(self, output: &[f64], target: &[f64]) -> Vec<f64> {
        let m = output.len() as f64;
        match self {
            Loss::Mse => output.iter().zip(target).map(|(y, t)| 2.0 * (y - t) / m).collect(),
            Loss::Logistic => output.iter().zip(target).map(|(&y, &t)| (sigmoid(y) - t) / m).collect(),
        }
    }
}

impl EncoderParams {
    /// Loss and parameter gradients for one `(input, target)` pair.
    pub fn loss_and_gradients(
        &self,
        input: &[f64],
        target: &[f64],
        loss: Loss,
    ) -> Result<(f64, Gradients), PerceptionError> {
        let cache = self.forward_cached(input)?;
        let out = cache.output();
        if target.len() != out.len() {
            return Err(PerceptionError::ShapeMismatch(format!(
                "target has {} values, network outputs {}",
                target.len(),
                out.len()
            )));
        }
        let value = loss.value(out, target);
        let (grads, _) = self.backward(&cache, &loss.gradient(out, target));
        Ok((value, grads))
    }

    pub fn loss(&self, input: &[f64], target: &[f64], loss: Loss) -> Result<f64, PerceptionError> {
        let out = self.forward(input)?;
        if target.len() != out.len() {
            return Err(PerceptionError::ShapeMismatch(format!(
                "target has {} values, network outputs {}",
                target.len(),
                out.len()
            )));
        }
        Ok(loss.value(&out, target))
    }
}

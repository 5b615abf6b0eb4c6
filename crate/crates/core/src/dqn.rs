//! A small dense value network with hand-rolled backprop and Adam.
//!
//! The architecture is fixed: 3 inputs (the observation triple), two ReLU
//! hidden layers of 24 and 12 units, and a linear 4-unit output, one Q-value
//! per supervisor action. Weights are stored row-major `(out, in)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const STATE_DIM: usize = 3;
pub const ACTION_COUNT: usize = 4;
/// Layer widths from input to output.
pub const LAYER_DIMS: [usize; 4] = [STATE_DIM, 24, 12, ACTION_COUNT];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    /// Row-major `(out_dim, in_dim)`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayer {
    fn zeros(in_dim: usize, out_dim: usize, activation: Activation) -> DenseLayer {
        DenseLayer {
            in_dim,
            out_dim,
            activation,
            weights: vec![0.0; in_dim * out_dim],
            biases: vec![0.0; out_dim],
        }
    }

    /// Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
    fn random(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut impl Rng) -> DenseLayer {
        let bound = 1.0 / (in_dim as f64).sqrt();
        DenseLayer {
            in_dim,
            out_dim,
            activation,
            weights: (0..in_dim * out_dim)
                .map(|_| rng.gen_range(-bound..=bound))
                .collect(),
            biases: (0..out_dim).map(|_| rng.gen_range(-bound..=bound)).collect(),
        }
    }

    fn forward(&self, input: &[f64], output: &mut Vec<f64>) {
        output.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut z = self.biases[o];
            for (w, x) in row.iter().zip(input) {
                z += w * x;
            }
            output.push(match self.activation {
                Activation::Relu => z.max(0.0),
                Activation::Linear => z,
            });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    pub layers: Vec<DenseLayer>,
}

impl QNetwork {
    pub fn random(rng: &mut impl Rng) -> QNetwork {
        QNetwork {
            layers: Self::build(|i, o, a| DenseLayer::random(i, o, a, rng)),
        }
    }

    pub fn zeros() -> QNetwork {
        QNetwork {
            layers: Self::build(DenseLayer::zeros),
        }
    }

    fn build(mut make: impl FnMut(usize, usize, Activation) -> DenseLayer) -> Vec<DenseLayer> {
        let mut layers = Vec::with_capacity(LAYER_DIMS.len() - 1);
        for i in 0..LAYER_DIMS.len() - 1 {
            let activation = if i + 2 == LAYER_DIMS.len() {
                Activation::Linear
            } else {
                Activation::Relu
            };
            layers.push(make(LAYER_DIMS[i], LAYER_DIMS[i + 1], activation));
        }
        layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].in_dim];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    /// Check the expected 3-24-12-4 shape.
    pub fn validate_shape(&self) -> Result<()> {
        let dims = self.layer_dims();
        if dims != LAYER_DIMS {
            return Err(Error::ArchitectureMismatch {
                expected: LAYER_DIMS.to_vec(),
                found: dims,
            });
        }
        Ok(())
    }

    pub fn forward(&self, input: [f64; STATE_DIM]) -> [f64; ACTION_COUNT] {
        let mut current = input.to_vec();
        let mut next = Vec::new();
        for layer in &self.layers {
            layer.forward(&current, &mut next);
            std::mem::swap(&mut current, &mut next);
        }
        let mut out = [0.0; ACTION_COUNT];
        out.copy_from_slice(&current);
        out
    }

    /// Forward pass keeping every post-activation vector for backprop.
    pub fn forward_trace(&self, input: [f64; STATE_DIM]) -> Vec<Vec<f64>> {
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut current = input.to_vec();
        for layer in &self.layers {
            let mut next = Vec::new();
            layer.forward(&current, &mut next);
            activations.push(next.clone());
            current = next;
        }
        activations
    }

    /// Backpropagate `d_output` (gradient of the loss w.r.t. the network
    /// output) through the trace produced by `forward_trace`, accumulating
    /// parameter gradients into `grads`.
    pub fn backprop(
        &self,
        input: [f64; STATE_DIM],
        activations: &[Vec<f64>],
        d_output: &[f64; ACTION_COUNT],
        grads: &mut Gradients,
    ) {
        let mut delta: Vec<f64> = d_output.to_vec();
        for idx in (0..self.layers.len()).rev() {
            let layer = &self.layers[idx];
            let out = &activations[idx];
            // ReLU derivative from the post-activation value: the unit was
            // live iff its output is positive.
            if layer.activation == Activation::Relu {
                for (d, &a) in delta.iter_mut().zip(out) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let layer_input: &[f64] = if idx == 0 {
                &input
            } else {
                &activations[idx - 1]
            };
            let g = &mut grads.layers[idx];
            for o in 0..layer.out_dim {
                g.d_biases[o] += delta[o];
                let row = &mut g.d_weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (dw, &x) in row.iter_mut().zip(layer_input) {
                    *dw += delta[o] * x;
                }
            }
            if idx > 0 {
                let mut prev = vec![0.0; layer.in_dim];
                for o in 0..layer.out_dim {
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (p, &w) in prev.iter_mut().zip(row) {
                        *p += delta[o] * w;
                    }
                }
                delta = prev;
            }
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    /// True when every parameter is finite.
    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|w| w.is_finite()) && l.biases.iter().all(|b| b.is_finite())
        })
    }
}

/// Parameter gradients mirroring a network's layer structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGradients>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub d_weights: Vec<f64>,
    pub d_biases: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &QNetwork) -> Gradients {
        Gradients {
            layers: net
                .layers
                .iter()
                .map(|l| LayerGradients {
                    d_weights: vec![0.0; l.weights.len()],
                    d_biases: vec![0.0; l.biases.len()],
                })
                .collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            for v in layer.d_weights.iter_mut().chain(layer.d_biases.iter_mut()) {
                *v *= factor;
            }
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend_from_slice(&layer.d_weights);
            out.extend_from_slice(&layer.d_biases);
        }
        out
    }
}

/// Adam with bias correction; state is serialized into checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    /// First/second moment estimates, flattened in layer order
    /// (weights then biases per layer).
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(learning_rate: f64, param_count: usize) -> Adam {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
        }
    }

    pub fn apply(&mut self, net: &mut QNetwork, grads: &Gradients) {
        self.step += 1;
        let t = self.step as i32;
        let bias1 = 1.0 - self.beta1.powi(t);
        let bias2 = 1.0 - self.beta2.powi(t);
        let mut cursor = 0usize;
        for (layer, g) in net.layers.iter_mut().zip(&grads.layers) {
            for (param, &grad) in layer
                .weights
                .iter_mut()
                .chain(layer.biases.iter_mut())
                .zip(g.d_weights.iter().chain(g.d_biases.iter()))
            {
                let m = &mut self.m[cursor];
                let v = &mut self.v[cursor];
                *m = self.beta1 * *m + (1.0 - self.beta1) * grad;
                *v = self.beta2 * *v + (1.0 - self.beta2) * grad * grad;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *param -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
                cursor += 1;
            }
        }
        debug_assert_eq!(cursor, self.m.len());
    }
}

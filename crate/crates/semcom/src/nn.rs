//! Minimal dense feed-forward network with reverse-mode gradients.
//!
//! Rectifier hidden units, identity output. Layers store row-major
//! `(out x in)` weight matrices. Summation order is fixed so identical
//! inputs always reproduce identical outputs and checkpoints replay
//! exactly. No graph engine: `backward` computes exact gradients of
//! `dot(output, upstream)` with respect to every parameter and the input,
//! which is all an actor-critic update needs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseNetwork {
    pub layer_sizes: Vec<usize>,
    /// `weights[l][o * in + i]`: layer `l`, output unit `o`, input unit `i`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Gradients of a scalar with respect to every parameter and the input.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientTape {
    pub weight_grads: Vec<Vec<f64>>,
    pub bias_grads: Vec<Vec<f64>>,
    pub input_grad: Vec<f64>,
}

impl DenseNetwork {
    /// Seeded uniform initialization in +-sqrt(6 / (fan_in + fan_out)).
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(invalid("layer_sizes", "need at least input and output layers"));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(invalid("layer_sizes", "layer sizes must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push((0..fan_in * fan_out).map(|_| rng.gen_range(-limit..limit)).collect());
            biases.push(vec![0.0; fan_out]);
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    fn layer_count(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_size() {
            return Err(Error::ShapeMismatch {
                context: "DenseNetwork input",
                expected: self.input_size(),
                got: input.len(),
            });
        }
        Ok(())
    }

    /// Post-activation values of every layer, input included.
    fn forward_trace(&self, input: &[f64]) -> Vec<Vec<f64>> {
        let mut activations = Vec::with_capacity(self.layer_count() + 1);
        activations.push(input.to_vec());
        for l in 0..self.layer_count() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let prev = &activations[l];
            let w = &self.weights[l];
            let mut out = self.biases[l].clone();
            for (o, out_o) in out.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut acc = 0.0;
                for i in 0..n_in {
                    acc += row[i] * prev[i];
                }
                *out_o += acc;
            }
            if l != self.layer_count() - 1 {
                for v in &mut out {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activations.push(out);
        }
        activations
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        Ok(self.forward_trace(input).pop().unwrap())
    }

    /// Exact gradients of `dot(output, upstream)` w.r.t. every parameter and
    /// the input. The input gradient carries the actor update through the
    /// critic's action slice.
    pub fn backward(&self, input: &[f64], upstream: &[f64]) -> Result<GradientTape> {
        self.check_input(input)?;
        if upstream.len() != self.output_size() {
            return Err(Error::ShapeMismatch {
                context: "DenseNetwork upstream",
                expected: self.output_size(),
                got: upstream.len(),
            });
        }
        let activations = self.forward_trace(input);
        let mut tape = GradientTape::zeros_like(self);
        let mut delta = upstream.to_vec();
        for l in (0..self.layer_count()).rev() {
            let (n_in, n_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            // Hidden layers saw a rectifier; its derivative gates the delta.
            if l != self.layer_count() - 1 {
                for (d, &a) in delta.iter_mut().zip(&activations[l + 1]) {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
            let prev = &activations[l];
            let wg = &mut tape.weight_grads[l];
            for o in 0..n_out {
                let d = delta[o];
                tape.bias_grads[l][o] = d;
                let row = &mut wg[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    row[i] = d * prev[i];
                }
            }
            let w = &self.weights[l];
            let mut next_delta = vec![0.0; n_in];
            for o in 0..n_out {
                let d = delta[o];
                let row = &w[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    next_delta[i] += d * row[i];
                }
            }
            delta = next_delta;
        }
        tape.input_grad = delta;
        Ok(tape)
    }

    /// Plain gradient-descent step: `theta <- theta - lr * grad`.
    pub fn apply_gradients(&mut self, tape: &GradientTape, learning_rate: f64) {
        for l in 0..self.layer_count() {
            for (w, g) in self.weights[l].iter_mut().zip(&tape.weight_grads[l]) {
                *w -= learning_rate * g;
            }
            for (b, g) in self.biases[l].iter_mut().zip(&tape.bias_grads[l]) {
                *b -= learning_rate * g;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.weights.iter().flatten().all(|v| v.is_finite())
            && self.biases.iter().flatten().all(|v| v.is_finite())
    }
}

impl GradientTape {
    pub fn zeros_like(net: &DenseNetwork) -> Self {
        Self {
            weight_grads: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            bias_grads: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
            input_grad: vec![0.0; net.input_size()],
        }
    }

    pub fn add_assign(&mut self, other: &GradientTape) {
        for (a, b) in self.weight_grads.iter_mut().zip(&other.weight_grads) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.bias_grads.iter_mut().zip(&other.bias_grads) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (x, y) in self.input_grad.iter_mut().zip(&other.input_grad) {
            *x += y;
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for g in self.weight_grads.iter_mut().flatten() {
            *g *= factor;
        }
        for g in self.bias_grads.iter_mut().flatten() {
            *g *= factor;
        }
        for g in &mut self.input_grad {
            *g *= factor;
        }
    }

    /// L2 norm over all parameter gradients (the input gradient is not a
    /// parameter and is excluded).
    pub fn global_norm(&self) -> f64 {
        let mut sq = 0.0;
        for g in self.weight_grads.iter().flatten() {
            sq += g * g;
        }
        for g in self.bias_grads.iter().flatten() {
            sq += g * g;
        }
        sq.sqrt()
    }

    /// Rescales so the global norm does not exceed `max_norm`; no-op when
    /// `max_norm <= 0`.
    pub fn clip_global_norm(&mut self, max_norm: f64) {
        if max_norm <= 0.0 {
            return;
        }
        let norm = self.global_norm();
        if norm > max_norm {
            self.scale(max_norm / norm);
        }
    }
}

/// Heavy-ball SGD; with `momentum = 0` this is the plain step.
#[derive(Debug, Clone)]
pub struct MomentumSgd {
    momentum: f64,
    velocity_w: Vec<Vec<f64>>,
    velocity_b: Vec<Vec<f64>>,
}

impl MomentumSgd {
    pub fn new(net: &DenseNetwork, momentum: f64) -> Self {
        Self {
            momentum,
            velocity_w: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            velocity_b: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn step(&mut self, net: &mut DenseNetwork, tape: &GradientTape, learning_rate: f64) {
        for l in 0..net.weights.len() {
            for ((w, v), g) in net.weights[l]
                .iter_mut()
                .zip(self.velocity_w[l].iter_mut())
                .zip(&tape.weight_grads[l])
            {
                *v = self.momentum * *v + g;
                *w -= learning_rate * *v;
            }
            for ((b, v), g) in net.biases[l]
                .iter_mut()
                .zip(self.velocity_b[l].iter_mut())
                .zip(&tape.bias_grads[l])
            {
                *v = self.momentum * *v + g;
                *b -= learning_rate * *v;
            }
        }
    }
}

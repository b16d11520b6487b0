//! Fully connected networks for one subdomain, and the Adam optimizer.
//!
//! A network of depth `d` is a stack of `d` affine layers
//! `2 -> w -> w -> ... -> w -> 1`; every layer but the last is followed by the
//! activation. Depth 1 is a single affine map `(x, t) -> u`.
//!
//! Parameters live in one flat vector. Layer by layer, the weight matrix is
//! stored row-major as `(fan_out, fan_in)`, followed by the `fan_out` biases.

use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::io::{read_envelope, write_envelope};

pub const INPUT_DIM: usize = 2;

const MODEL_FORMAT: &str = "d3pinn-model";
const MODEL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Tan,
    Sin,
}

impl Activation {
    /// `[σ(z), σ'(z), σ''(z), σ'''(z), σ''''(z)]`.
    #[inline]
    pub fn derivatives(self, z: f64) -> [f64; 5] {
        match self {
            Activation::Tanh => {
                let s0 = z.tanh();
                let s1 = 1.0 - s0 * s0;
                let s2 = -2.0 * s0 * s1;
                let s3 = -2.0 * s1 * s1 - 2.0 * s0 * s2;
                let s4 = -6.0 * s1 * s2 - 2.0 * s0 * s3;
                [s0, s1, s2, s3, s4]
            }
            Activation::Tan => {
                let s0 = z.tan();
                let s1 = 1.0 + s0 * s0;
                let s2 = 2.0 * s0 * s1;
                let s3 = 2.0 * s1 * s1 + 2.0 * s0 * s2;
                let s4 = 6.0 * s1 * s2 + 2.0 * s0 * s3;
                [s0, s1, s2, s3, s4]
            }
            Activation::Sin => {
                let (s, c) = z.sin_cos();
                [s, c, -s, -c, s]
            }
        }
    }
}

impl std::fmt::Display for Activation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Tan => "tan",
            Activation::Sin => "sin",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpConfig {
    pub input_dim: usize,
    /// Number of affine layers.
    pub depth: usize,
    /// Neurons per hidden layer.
    pub width: usize,
    pub activation: Activation,
    pub seed: u64,
}

impl MlpConfig {
    pub fn new(depth: usize, width: usize, activation: Activation, seed: u64) -> Self {
        MlpConfig {
            input_dim: INPUT_DIM,
            depth,
            width,
            activation,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim != INPUT_DIM {
            return Err(Error::config(
                "input_dim",
                format!("must be {INPUT_DIM}, got {}", self.input_dim),
            ));
        }
        if self.depth == 0 {
            return Err(Error::config("depth", "must be at least 1"));
        }
        if self.width == 0 {
            return Err(Error::config("width", "must be at least 1"));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every affine layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        (0..self.depth)
            .map(|l| {
                let fan_in = if l == 0 { self.input_dim } else { self.width };
                let fan_out = if l + 1 == self.depth { 1 } else { self.width };
                (fan_in, fan_out)
            })
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes()
            .iter()
            .map(|&(fan_in, fan_out)| fan_out * fan_in + fan_out)
            .sum()
    }
}

/// Position of one layer inside the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LayerSpan {
    pub fan_in: usize,
    pub fan_out: usize,
    pub weights: usize,
    pub biases: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    config: MlpConfig,
    parameters: Vec<f64>,
}

impl MlpModel {
    /// Glorot-uniform weights and zero biases, drawn from the config seed.
    pub fn init(config: MlpConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
        let mut parameters = vec![0.0; config.parameter_count()];
        let mut offset = 0;
        for (fan_in, fan_out) in config.layer_shapes() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit);
            for w in &mut parameters[offset..offset + fan_in * fan_out] {
                *w = dist.sample(&mut rng);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(MlpModel { config, parameters })
    }

    pub fn from_parameters(config: MlpConfig, parameters: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let expected = config.parameter_count();
        if parameters.len() != expected {
            return Err(Error::Dimension {
                expected,
                found: parameters.len(),
                context: "model parameters",
            });
        }
        Ok(MlpModel { config, parameters })
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn parameters(&self) -> &[f64] {
        &self.parameters
    }

    pub fn parameters_mut(&mut self) -> &mut [f64] {
        &mut self.parameters
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters.len()
    }

    pub fn layers(&self) -> Vec<LayerSpan> {
        let mut offset = 0;
        self.config
            .layer_shapes()
            .into_iter()
            .map(|(fan_in, fan_out)| {
                let span = LayerSpan {
                    fan_in,
                    fan_out,
                    weights: offset,
                    biases: offset + fan_in * fan_out,
                };
                offset += fan_in * fan_out + fan_out;
                span
            })
            .collect()
    }

    pub fn check_finite(&self) -> Result<()> {
        check_finite("model parameter", &self.parameters)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_envelope(path, MODEL_FORMAT, MODEL_VERSION, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let model: MlpModel = read_envelope(path, MODEL_FORMAT, MODEL_VERSION)?;
        MlpModel::from_parameters(model.config, model.parameters)
    }
}

/// Gradient of a scalar objective with respect to a flat parameter vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamGradient {
    pub components: Vec<f64>,
}

impl ParamGradient {
    pub fn zeros(len: usize) -> Self {
        ParamGradient {
            components: vec![0.0; len],
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(len: usize, hyper: AdamHyper) -> Self {
        AdamState {
            step: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
            hyper,
        }
    }

    /// One bias-corrected Adam update of `params` in place. The gradient is
    /// checked before anything is modified, so a rejected step leaves both
    /// the parameters and the optimizer state untouched.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if grad.len() != params.len() || self.m.len() != params.len() {
            return Err(Error::Dimension {
                expected: params.len(),
                found: grad.len(),
                context: "adam gradient",
            });
        }
        check_finite("gradient component", grad)?;

        let AdamHyper {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.hyper;
        self.step += 1;
        let exponent = i32::try_from(self.step).unwrap_or(i32::MAX);
        let correction1 = 1.0 - beta1.powi(exponent);
        let correction2 = 1.0 - beta2.powi(exponent);
        for (((p, &g), m), v) in params.iter_mut().zip(grad).zip(&mut self.m).zip(&mut self.v) {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / correction1;
            let v_hat = *v / correction2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

pub fn adam_step(model: &mut MlpModel, grad: &ParamGradient, state: &mut AdamState) -> Result<()> {
    state.update(&mut model.parameters, &grad.components)?;
    model.check_finite()
}

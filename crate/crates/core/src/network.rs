//! Fully connected networks with a flat parameter layout.
//!
//! Parameters are stored layer by layer. For each layer the weight matrix
//! (`out × in`, row-major) comes first, followed by its `out` biases. Hidden
//! layers apply the activation; the readout layer is linear.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::autodiff::Activation;
use crate::error::{config_err, Result};

/// Initial value of every bias.
pub const INITIAL_BIAS: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_layers: usize,
    pub width: usize,
    pub activation: Activation,
    #[serde(default = "default_output_dim")]
    pub output_dim: usize,
}

fn default_output_dim() -> usize {
    1
}

/// Shape and parameter offsets of one affine layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
    pub hidden: bool,
}

impl LayerShape {
    pub fn end(&self) -> usize {
        self.bias_offset + self.out_dim
    }
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_layers: usize, width: usize, activation: Activation) -> Self {
        Self { input_dim, hidden_layers, width, activation, output_dim: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.input_dim) {
            return config_err(format!("input_dim must be 1 or 2, got {}", self.input_dim));
        }
        if self.hidden_layers == 0 || self.width == 0 {
            return config_err("network needs at least one hidden layer of width >= 1");
        }
        if self.output_dim != 1 {
            return config_err(format!("output_dim must be 1, got {}", self.output_dim));
        }
        if !(self.activation.scale.is_finite() && self.activation.scale > 0.0) {
            return config_err("activation scale must be positive and finite");
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers().last().map_or(0, |l| l.end())
    }

    /// Hidden layers followed by the linear readout.
    pub fn layers(&self) -> Vec<LayerShape> {
        let mut out = Vec::with_capacity(self.hidden_layers + 1);
        let mut offset = 0;
        let mut in_dim = self.input_dim;
        for i in 0..=self.hidden_layers {
            let hidden = i < self.hidden_layers;
            let out_dim = if hidden { self.width } else { self.output_dim };
            let weight_offset = offset;
            let bias_offset = weight_offset + in_dim * out_dim;
            out.push(LayerShape { in_dim, out_dim, weight_offset, bias_offset, hidden });
            offset = bias_offset + out_dim;
            in_dim = out_dim;
        }
        out
    }

    pub(crate) fn check_params(&self, params: &ParamSet) -> Result<()> {
        if params.len() != self.param_count() {
            return config_err(format!(
                "parameter vector has {} entries, network needs {}",
                params.len(),
                self.param_count()
            ));
        }
        Ok(())
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim {
            return config_err(format!(
                "point has dimension {}, network expects {}",
                x.len(),
                self.input_dim
            ));
        }
        Ok(())
    }
}

/// Flat network parameters in the layout described by [`MlpSpec::layers`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet(pub Vec<f64>);

impl ParamSet {
    pub fn zeros(spec: &MlpSpec) -> Self {
        Self(vec![0.0; spec.param_count()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl From<Vec<f64>> for ParamSet {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Stream ids keep the different random draws of one seed independent.
pub(crate) mod streams {
    pub const INIT: u64 = 1;
    pub const RESIDUAL_INIT: u64 = 2;
    pub const INTERIOR: u64 = 3;
    pub const BOUNDARY: u64 = 4;
}

pub(crate) fn seeded_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Xavier-normal weights, `N(0, 2/(fan_in + fan_out))`, and every bias at 0.01.
pub fn init_xavier_normal(spec: &MlpSpec, seed: u64) -> ParamSet {
    init_xavier_normal_stream(spec, seed, streams::INIT)
}

pub(crate) fn init_xavier_normal_stream(spec: &MlpSpec, seed: u64, stream: u64) -> ParamSet {
    let mut rng = seeded_rng(seed, stream);
    let mut params = vec![0.0; spec.param_count()];
    for layer in spec.layers() {
        let std = (2.0 / (layer.in_dim + layer.out_dim) as f64).sqrt();
        for w in &mut params[layer.weight_offset..layer.bias_offset] {
            let z: f64 = StandardNormal.sample(&mut rng);
            *w = std * z;
        }
        params[layer.bias_offset..layer.end()].fill(INITIAL_BIAS);
    }
    ParamSet(params)
}

/// Plain evaluation of the network at one point.
pub fn forward(spec: &MlpSpec, params: &ParamSet, x: &[f64]) -> Result<f64> {
    spec.check_params(params)?;
    spec.check_point(x)?;
    Ok(forward_unchecked(spec, params.as_slice(), x))
}

pub(crate) fn forward_unchecked(spec: &MlpSpec, params: &[f64], x: &[f64]) -> f64 {
    let mut h = x.to_vec();
    let mut next = Vec::with_capacity(spec.width);
    for layer in spec.layers() {
        next.clear();
        for j in 0..layer.out_dim {
            let row = &params[layer.weight_offset + j * layer.in_dim..][..layer.in_dim];
            let mut z = params[layer.bias_offset + j];
            for (w, hk) in row.iter().zip(&h) {
                z += w * hk;
            }
            next.push(if layer.hidden { spec.activation.value(z) } else { z });
        }
        std::mem::swap(&mut h, &mut next);
    }
    h[0]
}

/// Evaluates the network at every point of a flat `n × d` coordinate buffer.
pub fn forward_many(spec: &MlpSpec, params: &ParamSet, coords: &[f64]) -> Result<Vec<f64>> {
    spec.check_params(params)?;
    let d = spec.input_dim;
    if coords.len() % d != 0 {
        return config_err("coordinate buffer length is not a multiple of the input dimension");
    }
    Ok(coords.chunks_exact(d).map(|x| forward_unchecked(spec, params.as_slice(), x)).collect())
}

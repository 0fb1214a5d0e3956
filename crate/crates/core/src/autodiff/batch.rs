//! Batched jet propagation.
//!
//! All channels of a batch are stacked into one row-major matrix so each
//! affine layer is a single matrix product. With `n` points in `d`
//! dimensions the stack holds `n` value rows, then `n` rows per first
//! derivative `∂/∂x_i`, then `n` rows per pure second derivative `∂²/∂x_i²`.
//! Biases only enter the value rows.

use super::gemm::{gemm, Strides};
use super::ParamGradient;
use crate::error::{config_err, Result};
use crate::network::{LayerShape, MlpSpec, ParamSet};

/// Which derivatives a batch carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Output values only.
    Value,
    /// Values, spatial gradients and Laplacians.
    Laplacian,
}

impl Order {
    fn channels(self, dim: usize) -> usize {
        match self {
            Order::Value => 1,
            Order::Laplacian => 1 + 2 * dim,
        }
    }
}

/// Jets at a set of points, without the intermediate state.
#[derive(Debug, Clone, PartialEq)]
pub struct JetValues {
    pub dim: usize,
    pub values: Vec<f64>,
    /// `n × dim`, row-major. Empty for [`Order::Value`].
    pub grads: Vec<f64>,
    /// Empty for [`Order::Value`].
    pub laps: Vec<f64>,
}

impl JetValues {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Adjoints of a scalar loss with respect to each jet component.
///
/// An empty vector stands for an all-zero adjoint.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct JetSeeds {
    pub value: Vec<f64>,
    /// `n × dim`, row-major.
    pub grad: Vec<f64>,
    pub lap: Vec<f64>,
}

struct LayerCache {
    input: Vec<f64>,
    z: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    d3: Vec<f64>,
}

/// Jets at a batch of points plus what the reverse pass needs.
pub struct JetBatch {
    pub jets: JetValues,
    order: Order,
    caches: Vec<LayerCache>,
}

impl std::ops::Deref for JetBatch {
    type Target = JetValues;

    fn deref(&self) -> &JetValues {
        &self.jets
    }
}

fn check_inputs(spec: &MlpSpec, params: &ParamSet, coords: &[f64]) -> Result<()> {
    spec.check_params(params)?;
    if coords.len() % spec.input_dim != 0 {
        return config_err(format!(
            "coordinate buffer of length {} does not hold {}-dimensional points",
            coords.len(),
            spec.input_dim
        ));
    }
    Ok(())
}

/// Forward jets at every point of a flat `n × d` buffer, keeping the state
/// needed by [`JetBatch::backward`].
pub fn jet_batch(spec: &MlpSpec, params: &ParamSet, coords: &[f64], order: Order) -> Result<JetBatch> {
    check_inputs(spec, params, coords)?;
    let mut caches = Vec::with_capacity(spec.hidden_layers + 1);
    let jets = propagate(spec, params.as_slice(), coords, order, Some(&mut caches));
    Ok(JetBatch { jets, order, caches })
}

const EVAL_CHUNK: usize = 4096;

/// Forward jets at every point of a flat `n × d` buffer, in bounded memory.
pub fn evaluate(spec: &MlpSpec, params: &ParamSet, coords: &[f64], order: Order) -> Result<JetValues> {
    check_inputs(spec, params, coords)?;
    let d = spec.input_dim;
    let n = coords.len() / d;
    let mut out = JetValues {
        dim: d,
        values: Vec::with_capacity(n),
        grads: Vec::with_capacity(if order == Order::Laplacian { n * d } else { 0 }),
        laps: Vec::with_capacity(if order == Order::Laplacian { n } else { 0 }),
    };
    for chunk in coords.chunks(EVAL_CHUNK * d) {
        let part = propagate(spec, params.as_slice(), chunk, order, None);
        out.values.extend_from_slice(&part.values);
        out.grads.extend_from_slice(&part.grads);
        out.laps.extend_from_slice(&part.laps);
    }
    Ok(out)
}

fn propagate(
    spec: &MlpSpec,
    params: &[f64],
    coords: &[f64],
    order: Order,
    mut caches: Option<&mut Vec<LayerCache>>,
) -> JetValues {
    let d = spec.input_dim;
    let n = coords.len() / d;
    let rows = order.channels(d) * n;
    let laplacian = order == Order::Laplacian;

    let mut input = vec![0.0; rows * d];
    input[..n * d].copy_from_slice(coords);
    if laplacian {
        for i in 0..d {
            for r in 0..n {
                input[((1 + i) * n + r) * d + i] = 1.0;
            }
        }
    }

    let act = spec.activation;
    let mut output = Vec::new();
    for layer in spec.layers() {
        let LayerShape { in_dim, out_dim: out, weight_offset, bias_offset, hidden } = layer;
        let weights = &params[weight_offset..bias_offset];
        let bias = &params[bias_offset..layer.end()];

        let mut z = vec![0.0; rows * out];
        gemm(
            rows,
            in_dim,
            out,
            &input,
            Strides::row_major(in_dim),
            weights,
            Strides::transposed(in_dim),
            0.0,
            &mut z,
            Strides::row_major(out),
        );
        for row in z[..n * out].chunks_exact_mut(out) {
            for (zj, bj) in row.iter_mut().zip(bias) {
                *zj += bj;
            }
        }

        if !hidden {
            if let Some(c) = caches.as_deref_mut() {
                c.push(LayerCache { input, z: Vec::new(), d1: Vec::new(), d2: Vec::new(), d3: Vec::new() });
            }
            output = z;
            break;
        }

        let block = n * out;
        let mut h = vec![0.0; rows * out];
        let mut d1 = vec![0.0; block];
        let (mut d2, mut d3) = if laplacian { (vec![0.0; block], vec![0.0; block]) } else { (Vec::new(), Vec::new()) };
        for idx in 0..block {
            let dv = act.derivs(z[idx]);
            h[idx] = dv.value;
            d1[idx] = dv.d1;
            if laplacian {
                d2[idx] = dv.d2;
                d3[idx] = dv.d3;
            }
        }
        if laplacian {
            for i in 0..d {
                let first = (1 + i) * block;
                let second = (1 + d + i) * block;
                for idx in 0..block {
                    let dz = z[first + idx];
                    let d2z = z[second + idx];
                    h[first + idx] = d1[idx] * dz;
                    h[second + idx] = d2[idx] * dz * dz + d1[idx] * d2z;
                }
            }
        }
        if let Some(c) = caches.as_deref_mut() {
            c.push(LayerCache { input, z, d1, d2, d3 });
        }
        input = h;
    }

    let values = output[..n].to_vec();
    let (mut grads, mut laps) = (Vec::new(), Vec::new());
    if laplacian {
        grads = vec![0.0; n * d];
        laps = vec![0.0; n];
        for i in 0..d {
            for r in 0..n {
                grads[r * d + i] = output[(1 + i) * n + r];
                laps[r] += output[(1 + d + i) * n + r];
            }
        }
    }
    JetValues { dim: d, values, grads, laps }
}

impl JetBatch {
    pub fn order(&self) -> Order {
        self.order
    }

    /// Pulls the jet adjoints in `seeds` back to the network parameters.
    pub fn backward(&self, spec: &MlpSpec, params: &ParamSet, seeds: &JetSeeds) -> Result<ParamGradient> {
        spec.check_params(params)?;
        let d = self.jets.dim;
        let n = self.jets.len();
        let laplacian = self.order == Order::Laplacian;
        let rows = self.order.channels(d) * n;
        for (name, len, expected) in [
            ("value", seeds.value.len(), n),
            ("grad", seeds.grad.len(), n * d),
            ("lap", seeds.lap.len(), n),
        ] {
            if len != 0 && len != expected {
                return config_err(format!("{name} seed has length {len}, expected {expected}"));
            }
        }
        if !laplacian && !(seeds.grad.is_empty() && seeds.lap.is_empty()) {
            return config_err("derivative seeds given for a value-only batch");
        }

        let mut sbar = vec![0.0; rows];
        if !seeds.value.is_empty() {
            sbar[..n].copy_from_slice(&seeds.value);
        }
        if laplacian {
            for i in 0..d {
                for r in 0..n {
                    if !seeds.grad.is_empty() {
                        sbar[(1 + i) * n + r] = seeds.grad[r * d + i];
                    }
                    if !seeds.lap.is_empty() {
                        sbar[(1 + d + i) * n + r] = seeds.lap[r];
                    }
                }
            }
        }

        let params = params.as_slice();
        let mut grad = vec![0.0; params.len()];
        for (li, layer) in spec.layers().iter().enumerate().rev() {
            let cache = &self.caches[li];
            let (in_dim, out) = (layer.in_dim, layer.out_dim);
            let zbar = if layer.hidden { self.hidden_adjoint(cache, &sbar, out) } else { sbar };

            gemm(
                out,
                rows,
                in_dim,
                &zbar,
                Strides::transposed(out),
                &cache.input,
                Strides::row_major(in_dim),
                0.0,
                &mut grad[layer.weight_offset..layer.bias_offset],
                Strides::row_major(in_dim),
            );
            let gb = &mut grad[layer.bias_offset..layer.end()];
            for row in zbar[..n * out].chunks_exact(out) {
                for (g, z) in gb.iter_mut().zip(row) {
                    *g += z;
                }
            }

            if li == 0 {
                break;
            }
            let mut prev = vec![0.0; rows * in_dim];
            gemm(
                rows,
                out,
                in_dim,
                &zbar,
                Strides::row_major(out),
                &params[layer.weight_offset..layer.bias_offset],
                Strides::row_major(in_dim),
                0.0,
                &mut prev,
                Strides::row_major(in_dim),
            );
            sbar = prev;
        }
        Ok(ParamGradient(grad))
    }

    // Adjoint of the pre-activation stack given the adjoint of the
    // post-activation stack.
    fn hidden_adjoint(&self, cache: &LayerCache, hbar: &[f64], out: usize) -> Vec<f64> {
        let d = self.jets.dim;
        let block = self.jets.len() * out;
        let LayerCache { z, d1, d2, d3, .. } = cache;
        let mut zbar = vec![0.0; hbar.len()];
        for idx in 0..block {
            zbar[idx] = d1[idx] * hbar[idx];
        }
        if self.order == Order::Laplacian {
            for i in 0..d {
                let first = (1 + i) * block;
                let second = (1 + d + i) * block;
                for idx in 0..block {
                    let dz = z[first + idx];
                    let d2z = z[second + idx];
                    let dh = hbar[first + idx];
                    let d2h = hbar[second + idx];
                    zbar[idx] += d2[idx] * dz * dh + (d3[idx] * dz * dz + d2[idx] * d2z) * d2h;
                    zbar[first + idx] = d1[idx] * dh + 2.0 * d2[idx] * dz * d2h;
                    zbar[second + idx] = d1[idx] * d2h;
                }
            }
        }
        zbar
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Activation;
    use crate::network::init_xavier_normal;

    #[test]
    fn chunked_evaluation_matches_single_batch() {
        let spec = MlpSpec::new(1, 2, 6, Activation::tanh());
        let p = init_xavier_normal(&spec, 11);
        let coords: Vec<f64> = (0..EVAL_CHUNK + 37).map(|i| -1.0 + i as f64 * 1e-4).collect();
        let a = evaluate(&spec, &p, &coords, Order::Laplacian).unwrap();
        let b = jet_batch(&spec, &p, &coords, Order::Laplacian).unwrap();
        assert_eq!(a, b.jets);
    }

    #[test]
    fn value_batch_rejects_derivative_seeds() {
        let spec = MlpSpec::new(1, 1, 2, Activation::tanh());
        let p = init_xavier_normal(&spec, 0);
        let b = jet_batch(&spec, &p, &[0.1, 0.2], Order::Value).unwrap();
        let seeds = JetSeeds { lap: vec![1.0, 1.0], ..Default::default() };
        assert!(b.backward(&spec, &p, &seeds).is_err());
        let bad = JetSeeds { value: vec![1.0], ..Default::default() };
        assert!(b.backward(&spec, &p, &bad).is_err());
    }

    #[test]
    fn odd_coordinate_buffer_is_rejected() {
        let spec = MlpSpec::new(2, 1, 2, Activation::tanh());
        let p = init_xavier_normal(&spec, 0);
        assert!(jet_batch(&spec, &p, &[0.1, 0.2, 0.3], Order::Value).is_err());
    }
}

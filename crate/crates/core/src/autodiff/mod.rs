//! Spatial jets of network outputs and parameter gradients through them.
//!
//! Spatial derivatives are propagated in forward mode: every hidden unit
//! carries its value, one first derivative per input coordinate and one pure
//! second derivative per input coordinate. The Laplacian is the sum of the
//! pure second derivatives of the readout. Parameter gradients are obtained
//! by running reverse mode over that jet computation, so losses that contain
//! `ΔN` are differentiated exactly.

mod activation;
mod batch;
mod gemm;

pub use activation::{activation_jet, softplus, Activation, ActivationDerivs, ActivationKind};
pub use batch::{evaluate, jet_batch, JetBatch, JetSeeds, JetValues, Order};

use crate::error::{Error, Result};
use crate::network::{MlpSpec, ParamSet};

/// Value, spatial gradient and spatial Laplacian of a scalar field at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub spatial_grad: Vec<f64>,
    pub spatial_lap: f64,
}

/// Derivative of a scalar loss with respect to every network parameter.
///
/// Shares the layout of the [`ParamSet`] it was computed for.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGradient(pub Vec<f64>);

impl ParamGradient {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `self += other`.
    pub fn accumulate(&mut self, other: &ParamGradient) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }

    /// Fails with the index of the first NaN or infinite entry.
    pub fn check_finite(&self) -> Result<()> {
        match self.0.iter().position(|g| !g.is_finite()) {
            Some(index) => Err(Error::NonFiniteGradient { index, value: self.0[index] }),
            None => Ok(()),
        }
    }
}

/// Exact value, gradient and Laplacian of the network at `x`.
pub fn jet_forward(spec: &MlpSpec, params: &ParamSet, x: &[f64]) -> Result<Jet> {
    spec.check_point(x)?;
    let batch = evaluate(spec, params, x, Order::Laplacian)?;
    Ok(Jet {
        value: batch.values[0],
        spatial_grad: batch.grads,
        spatial_lap: batch.laps[0],
    })
}

/// Evaluates a batch loss built from network jets and differentiates it with
/// respect to the parameters.
///
/// `loss` receives the jets at every point of `coords` and returns the loss
/// value together with its partial derivatives with respect to each jet
/// component. Returns the loss and `∂loss/∂θ`.
pub fn loss_param_gradient<F>(
    spec: &MlpSpec,
    params: &ParamSet,
    coords: &[f64],
    order: Order,
    loss: F,
) -> Result<(f64, ParamGradient)>
where
    F: FnOnce(&JetBatch) -> (f64, JetSeeds),
{
    let batch = jet_batch(spec, params, coords, order)?;
    let (value, seeds) = loss(&batch);
    if !value.is_finite() {
        return Err(Error::Numerical(format!("loss evaluated to {value}")));
    }
    let grad = batch.backward(spec, params, &seeds)?;
    grad.check_finite()?;
    Ok((value, grad))
}

//! Pointwise activations with analytic derivatives up to third order.
//!
//! The jet forward pass needs the value and the first two derivatives. The
//! reverse pass through the jet needs one more, since the second derivative
//! of a hidden unit depends on `σ''` and that in turn on the parameters.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Tanh,
    Mish,
    Sin,
}

/// An activation function together with its frequency scale.
///
/// The scale only affects `Sin`, which evaluates `sin(a·z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Activation {
    pub kind: ActivationKind,
    #[serde(default = "unit_scale")]
    pub scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

/// Value and derivatives of an activation at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationDerivs {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Activation {
    pub const fn tanh() -> Self {
        Self { kind: ActivationKind::Tanh, scale: 1.0 }
    }

    pub const fn mish() -> Self {
        Self { kind: ActivationKind::Mish, scale: 1.0 }
    }

    pub const fn sin(scale: f64) -> Self {
        Self { kind: ActivationKind::Sin, scale }
    }

    /// Short human-readable name, e.g. `sin(5x)`.
    pub fn label(&self) -> String {
        match self.kind {
            ActivationKind::Tanh => "tanh(x)".to_string(),
            ActivationKind::Mish => "mish".to_string(),
            ActivationKind::Sin if self.scale == 1.0 => "sin(x)".to_string(),
            ActivationKind::Sin => format!("sin({}x)", self.scale),
        }
    }

    pub fn value(&self, z: f64) -> f64 {
        match self.kind {
            ActivationKind::Tanh => z.tanh(),
            ActivationKind::Mish => z * softplus(z).tanh(),
            ActivationKind::Sin => (self.scale * z).sin(),
        }
    }

    /// `(σ(z), σ'(z), σ''(z))`.
    pub fn jet(&self, z: f64) -> (f64, f64, f64) {
        let d = self.derivs(z);
        (d.value, d.d1, d.d2)
    }

    pub fn derivs(&self, z: f64) -> ActivationDerivs {
        match self.kind {
            ActivationKind::Tanh => {
                let t = z.tanh();
                let s = 1.0 - t * t;
                ActivationDerivs {
                    value: t,
                    d1: s,
                    d2: -2.0 * t * s,
                    d3: s * (6.0 * t * t - 2.0),
                }
            }
            ActivationKind::Mish => mish_derivs(z),
            ActivationKind::Sin => {
                let a = self.scale;
                let (s, c) = (a * z).sin_cos();
                ActivationDerivs {
                    value: s,
                    d1: a * c,
                    d2: -a * a * s,
                    d3: -a * a * a * c,
                }
            }
        }
    }
}

/// `ln(1 + e^z)` without overflow for large `z`.
pub fn softplus(z: f64) -> f64 {
    if z > 20.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// mish(z) = z·T with T = tanh(softplus(z)); softplus' = s = sigmoid(z),
// T' = (1 - T²)s, s' = s(1 - s).
fn mish_derivs(z: f64) -> ActivationDerivs {
    let t = softplus(z).tanh();
    let s = sigmoid(z);
    let sech2 = 1.0 - t * t;
    let p = sech2 * s;
    let q = 2.0 + z * (1.0 - s) - 2.0 * z * t * s;
    let dp = p * ((1.0 - s) - 2.0 * t * s);
    let dq = (1.0 - s) - z * s * (1.0 - s) - 2.0 * t * s - 2.0 * z * sech2 * s * s
        - 2.0 * z * t * s * (1.0 - s);
    ActivationDerivs {
        value: z * t,
        d1: t + z * p,
        d2: p * q,
        d3: dp * q + p * dq,
    }
}

/// `(σ(z), σ'(z), σ''(z))` for the given kind and scale.
pub fn activation_jet(kind: ActivationKind, scale: f64, z: f64) -> (f64, f64, f64) {
    Activation { kind, scale }.jet(z)
}

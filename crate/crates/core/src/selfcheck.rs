//! Finite-difference consistency checks of the derivative code on random
//! networks, for running outside the test harness.

use std::f64::consts::PI;

use rand::RngExt;

use crate::autodiff::{jet_forward, loss_param_gradient, Activation, JetSeeds, Order};
use crate::error::Result;
use crate::network::{forward, init_xavier_normal, seeded_rng, MlpSpec, ParamSet};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    /// `max |exact − fd| / max |fd|` over all checked entries.
    pub rel_error: f64,
    pub tolerance: f64,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.rel_error < self.tolerance
    }
}

#[derive(Default)]
struct MaxRel {
    diff: f64,
    scale: f64,
}

impl MaxRel {
    fn push(&mut self, exact: f64, approx: f64) {
        self.diff = self.diff.max((exact - approx).abs());
        self.scale = self.scale.max(approx.abs());
    }

    fn value(&self) -> f64 {
        if self.scale == 0.0 {
            self.diff
        } else {
            self.diff / self.scale
        }
    }
}

/// The `k`-th network of the check battery: activations and input
/// dimensions cycle, sizes vary.
pub fn battery_net(k: usize) -> MlpSpec {
    let act = match k % 3 {
        0 => Activation::tanh(),
        1 => Activation::mish(),
        _ => Activation::sin([1.0, 2.0, 5.0][(k / 3) % 3]),
    };
    MlpSpec::new(1 + (k / 3) % 2, 1 + k % 4, 4 + (7 * k) % 17, act)
}

fn shifted(x: &[f64], axis: usize, h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[axis] += h;
    y
}

/// Spatial gradient and Laplacian against fourth-order central differences.
pub fn check_spatial(nets: usize, seed: u64) -> Result<(CheckOutcome, CheckOutcome)> {
    let mut rng = seeded_rng(seed, 0);
    let (mut grad, mut lap) = (MaxRel::default(), MaxRel::default());
    let h = 1e-3;
    for k in 0..nets {
        let spec = battery_net(k);
        let params = init_xavier_normal(&spec, seed.wrapping_add(k as u64));
        for _ in 0..4 {
            let x: Vec<f64> = (0..spec.input_dim).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let jet = jet_forward(&spec, &params, &x)?;
            let mut fd_lap = 0.0;
            for i in 0..spec.input_dim {
                let n = |t: f64| forward(&spec, &params, &shifted(&x, i, t));
                let (p1, m1, p2, m2) = (n(h)?, n(-h)?, n(2.0 * h)?, n(-2.0 * h)?);
                grad.push(jet.spatial_grad[i], (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h));
                fd_lap += (-p2 + 16.0 * p1 - 30.0 * jet.value + 16.0 * m1 - m2) / (12.0 * h * h);
            }
            lap.push(jet.spatial_lap, fd_lap);
        }
    }
    Ok((
        CheckOutcome { name: "spatial gradient".into(), rel_error: grad.value(), tolerance: 1e-5 },
        CheckOutcome { name: "spatial laplacian".into(), rel_error: lap.value(), tolerance: 1e-5 },
    ))
}

fn rhs(x: &[f64]) -> f64 {
    x.iter().map(|v| (PI * v).sin()).product::<f64>() * PI * PI * x.len() as f64
}

// mean over the points of (f + ΔN)² + N²
fn probe_loss(spec: &MlpSpec, params: &ParamSet, xs: &[f64]) -> Result<f64> {
    let d = spec.input_dim;
    let mut s = 0.0;
    for x in xs.chunks(d) {
        let j = jet_forward(spec, params, x)?;
        let r = rhs(x) + j.spatial_lap;
        s += r * r + j.value * j.value;
    }
    Ok(s / (xs.len() / d) as f64)
}

/// Parameter gradient of a loss containing `ΔN` against central differences.
pub fn check_param_gradient(nets: usize, seed: u64) -> Result<CheckOutcome> {
    let mut rng = seeded_rng(seed, 1);
    let mut acc = MaxRel::default();
    let h = 1e-5;
    for k in 0..nets {
        let spec = battery_net(k);
        let params = init_xavier_normal(&spec, seed.wrapping_add(k as u64));
        let d = spec.input_dim;
        let xs: Vec<f64> = (0..8 * d).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let (_, g) = loss_param_gradient(&spec, &params, &xs, Order::Laplacian, |b| {
            let n = b.len() as f64;
            let mut loss = 0.0;
            let mut seeds = JetSeeds { value: vec![0.0; b.len()], grad: Vec::new(), lap: vec![0.0; b.len()] };
            for (i, x) in xs.chunks(d).enumerate() {
                let r = rhs(x) + b.laps[i];
                loss += (r * r + b.values[i] * b.values[i]) / n;
                seeds.lap[i] = 2.0 * r / n;
                seeds.value[i] = 2.0 * b.values[i] / n;
            }
            (loss, seeds)
        })?;
        for i in 0..params.len() {
            let mut p = params.clone();
            p.0[i] += h;
            let up = probe_loss(&spec, &p, &xs)?;
            p.0[i] = params.0[i] - h;
            let down = probe_loss(&spec, &p, &xs)?;
            acc.push(g.0[i], (up - down) / (2.0 * h));
        }
    }
    Ok(CheckOutcome { name: "parameter gradient".into(), rel_error: acc.value(), tolerance: 1e-4 })
}

/// Every check on `nets` random networks.
pub fn run_all(nets: usize, seed: u64) -> Result<Vec<CheckOutcome>> {
    let (g, l) = check_spatial(nets, seed)?;
    Ok(vec![g, l, check_param_gradient(nets, seed)?])
}

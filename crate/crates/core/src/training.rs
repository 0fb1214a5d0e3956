//! Loss assembly and the two-stage training pipeline.
//!
//! Stage one trains `N̂` on the problem posed on `bΩ` and maps the result back
//! to `θ_s` on `Ω`. Stage two trains a correction `N_r` on the original
//! domain against the residual equation `-ΔN_r = f + ΔN_s`, `N_r = g − N_s`
//! on `∂Ω`. All reported errors refer to the original domain.

use std::time::Instant;

use serde::{Deserialize, Deserializer, Serialize};

use crate::autodiff::{evaluate, jet_batch, JetSeeds, Order, ParamGradient};
use crate::error::{config_err, Error, Result};
use crate::metrics::{dft_coefficient, rel_l2_error, rel_residual_error, ErrorReport};
use crate::network::{init_xavier_normal, init_xavier_normal_stream, streams, MlpSpec, ParamSet};
use crate::optimizer::{AdamState, DEFAULT_LR};
use crate::problems::{scale_back_materialize, BoxDomain, Problem, ProblemSpec};
use crate::sampling::{boundary_sample, latin_hypercube, periodic_grid, uniform_grid, BoundaryMode, PointSet};

/// Losses above this are treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Points per jet batch when assembling a loss gradient.
const TRAIN_CHUNK: usize = 8192;

/// DFT indices of the two regression-target frequencies on a `[-1, 1)` grid.
pub const ALPHA_LOW_INDEX: usize = 2;
pub const ALPHA_HIGH_INDEX: usize = 50;
const SPECTRUM_POINTS: usize = 1000;

/// Below this ratio `‖f + ΔN_s‖ / ‖f‖` the residual right-hand side is
/// rounding noise and the residual stage uses `w₁ = 1`.
const RESIDUAL_NOISE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualConfig {
    pub network: MlpSpec,
    pub epochs: usize,
}

/// Hyperparameters of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub problem: ProblemSpec,
    /// Accepts a number or a string such as `"16pi"`.
    #[serde(default = "unit", deserialize_with = "deserialize_scale")]
    pub scale_b: f64,
    pub network: MlpSpec,
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_interior")]
    pub interior_count: usize,
    /// Defaults to 2 in 1D and 4000 in 2D.
    #[serde(default)]
    pub boundary_count: Option<usize>,
    /// Defaults to 100,000 in 1D and 1,000 × 1,000 in 2D.
    #[serde(default)]
    pub test_count: Option<usize>,
    /// Use a uniform grid for seed 0. Defaults to true for regression only.
    #[serde(default)]
    pub first_set_uniform: Option<bool>,
    #[serde(default)]
    pub residual: Option<ResidualConfig>,
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    /// Also record the test-grid error at every evaluation.
    #[serde(default)]
    pub track_test_error: bool,
}

fn unit() -> f64 {
    1.0
}

fn default_lr() -> f64 {
    DEFAULT_LR
}

fn default_seeds() -> Vec<u64> {
    (0..6).collect()
}

fn default_interior() -> usize {
    1000
}

fn default_eval_every() -> usize {
    100
}

/// Parses `"16pi"`, `"16*pi"`, `"16π"`, `"pi"` or a plain number.
pub fn parse_scale(s: &str) -> Result<f64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let (coef, pi) = if let Some(c) = t.strip_suffix("pi").or_else(|| t.strip_suffix('π')) {
        (c.strip_suffix('*').unwrap_or(c), true)
    } else {
        (t.as_str(), false)
    };
    let c = if coef.is_empty() && pi {
        1.0
    } else {
        coef.parse::<f64>().map_err(|_| Error::Config(format!("cannot parse scaling factor {s:?}")))?
    };
    Ok(if pi { c * std::f64::consts::PI } else { c })
}

fn deserialize_scale<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Text(s) => parse_scale(&s).map_err(serde::de::Error::custom),
    }
}

impl TrainConfig {
    /// A config with every optional field at its default.
    pub fn new(problem: ProblemSpec, network: MlpSpec, epochs: usize) -> Self {
        Self {
            problem,
            scale_b: 1.0,
            network,
            epochs,
            lr: DEFAULT_LR,
            seeds: default_seeds(),
            interior_count: default_interior(),
            boundary_count: None,
            test_count: None,
            first_set_uniform: None,
            residual: None,
            eval_every: default_eval_every(),
            track_test_error: false,
        }
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary_count.unwrap_or(if self.problem.dim() == 1 { 2 } else { 4000 })
    }

    pub fn test_count(&self) -> usize {
        self.test_count.unwrap_or(if self.problem.dim() == 1 { 100_000 } else { 1_000_000 })
    }

    pub fn first_set_uniform(&self) -> bool {
        self.first_set_uniform.unwrap_or(self.problem == ProblemSpec::Regression)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        if self.network.input_dim != self.problem.dim() {
            return config_err(format!(
                "network input_dim {} does not match the {}D problem",
                self.network.input_dim,
                self.problem.dim()
            ));
        }
        if !(self.scale_b.is_finite() && self.scale_b >= 1.0) {
            return config_err(format!("scale_b must be >= 1, got {}", self.scale_b));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return config_err("lr must be positive");
        }
        if self.eval_every == 0 {
            return config_err("eval_every must be >= 1");
        }
        if self.interior_count == 0 {
            return config_err("interior_count must be >= 1");
        }
        if self.test_count() < 2 {
            return config_err("test_count must be >= 2");
        }
        if let Some(r) = &self.residual {
            if self.problem == ProblemSpec::Regression {
                return config_err("the residual stage applies to Poisson problems only");
            }
            r.network.validate()?;
            if r.network.input_dim != self.problem.dim() {
                return config_err("residual network input_dim does not match the problem");
            }
        }
        Ok(())
    }
}

/// Training points in the original domain.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingData {
    pub interior: PointSet,
    /// `None` for regression.
    pub boundary: Option<PointSet>,
}

impl TrainingData {
    pub fn scaled(&self, b: f64) -> Self {
        Self {
            interior: self.interior.scaled(b),
            boundary: self.boundary.as_ref().map(|p| p.scaled(b)),
        }
    }
}

/// The training set for `seed`: a uniform grid for seed 0 when configured,
/// Latin-hypercube interior points otherwise; the boundary is the two
/// endpoints in 1D and random edge points in 2D.
pub fn training_data(config: &TrainConfig, domain: &BoxDomain, seed: u64) -> Result<TrainingData> {
    let interior = if config.first_set_uniform() && seed == 0 {
        uniform_grid(domain, config.interior_count)?
    } else {
        latin_hypercube(domain, config.interior_count, seed)?
    };
    let boundary = match config.problem {
        ProblemSpec::Regression => None,
        _ => {
            let mode = if domain.dim() == 1 { BoundaryMode::Uniform } else { BoundaryMode::Random(seed) };
            Some(boundary_sample(domain, config.boundary_count(), mode)?)
        }
    };
    Ok(TrainingData { interior, boundary })
}

/// `w₁ = |X| / Σ f(x)²`.
pub fn weight_w1(f_values: &[f64]) -> Result<f64> {
    let s: f64 = f_values.iter().map(|v| v * v).sum();
    if f_values.is_empty() || s == 0.0 {
        return config_err("right-hand side vanishes on the training set; use w1 = 1");
    }
    Ok(f_values.len() as f64 / s)
}

/// Weighted interior and boundary contributions to a loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub interior: f64,
    pub boundary: f64,
}

impl LossTerms {
    pub fn total(&self) -> f64 {
        self.interior + self.boundary
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Residual {
    /// `N − t`
    Value,
    /// `t + ΔN`
    Laplacian,
}

/// `weight · mean((residual)²)` over the points, adding its gradient into
/// `grad` when given.
fn squared_term(
    spec: &MlpSpec,
    params: &ParamSet,
    coords: &[f64],
    targets: &[f64],
    weight: f64,
    kind: Residual,
    mut grad: Option<&mut ParamGradient>,
) -> Result<f64> {
    let d = spec.input_dim;
    if coords.len() != targets.len() * d {
        return config_err("point and target counts differ");
    }
    if targets.is_empty() {
        return config_err("loss term over an empty point set");
    }
    let n = targets.len() as f64;
    let order = match kind {
        Residual::Value => Order::Value,
        Residual::Laplacian => Order::Laplacian,
    };
    let mut sum = 0.0;
    for (xs, ts) in coords.chunks(TRAIN_CHUNK * d).zip(targets.chunks(TRAIN_CHUNK)) {
        let residual = |jets: &crate::autodiff::JetValues| -> Vec<f64> {
            match kind {
                Residual::Value => jets.values.iter().zip(ts).map(|(v, t)| v - t).collect(),
                Residual::Laplacian => jets.laps.iter().zip(ts).map(|(l, t)| t + l).collect(),
            }
        };
        match grad.as_deref_mut() {
            Some(g) => {
                let batch = jet_batch(spec, params, xs, order)?;
                let r = residual(&batch);
                sum += r.iter().map(|v| v * v).sum::<f64>();
                let adj: Vec<f64> = r.iter().map(|v| 2.0 * weight * v / n).collect();
                let seeds = match kind {
                    Residual::Value => JetSeeds { value: adj, ..Default::default() },
                    Residual::Laplacian => JetSeeds { lap: adj, ..Default::default() },
                };
                g.accumulate(&batch.backward(spec, params, &seeds)?);
            }
            None => {
                let r = residual(&evaluate(spec, params, xs, order)?);
                sum += r.iter().map(|v| v * v).sum::<f64>();
            }
        }
    }
    Ok(weight * sum / n)
}

/// A training objective with its data already evaluated at the points.
#[derive(Debug, Clone, PartialEq)]
pub enum Objective {
    /// `mean (N − u)²`.
    Regression { coords: Vec<f64>, targets: Vec<f64> },
    /// `w₁·mean (rhs + ΔN)² + w₂·mean (bvals − N)²`.
    Pde {
        interior: Vec<f64>,
        rhs: Vec<f64>,
        boundary: Vec<f64>,
        bvals: Vec<f64>,
        w1: f64,
        w2: f64,
    },
}

impl Objective {
    /// The objective of `problem` on `data`, with `w₁` from the problem's
    /// right-hand side and `w₂ = 1`.
    pub fn for_problem(problem: &Problem, data: &TrainingData) -> Result<Self> {
        let coords = data.interior.coords.clone();
        Ok(match problem {
            Problem::Regression(t) => Objective::Regression { targets: data.interior.map(|x| t.eval(x)), coords },
            Problem::Poisson(p) => {
                let bdy = data
                    .boundary
                    .as_ref()
                    .ok_or_else(|| Error::Config("Poisson training needs boundary points".into()))?;
                let rhs = data.interior.map(|x| p.rhs(x));
                Objective::Pde {
                    w1: weight_w1(&rhs)?,
                    w2: 1.0,
                    interior: coords,
                    rhs,
                    boundary: bdy.coords.clone(),
                    bvals: bdy.map(|x| p.boundary(x)),
                }
            }
        })
    }

    pub fn w1(&self) -> Option<f64> {
        match self {
            Objective::Pde { w1, .. } => Some(*w1),
            Objective::Regression { .. } => None,
        }
    }

    fn eval_inner(&self, spec: &MlpSpec, params: &ParamSet, mut grad: Option<&mut ParamGradient>) -> Result<LossTerms> {
        match self {
            Objective::Regression { coords, targets } => Ok(LossTerms {
                interior: squared_term(spec, params, coords, targets, 1.0, Residual::Value, grad)?,
                boundary: 0.0,
            }),
            Objective::Pde { interior, rhs, boundary, bvals, w1, w2 } => Ok(LossTerms {
                interior: squared_term(spec, params, interior, rhs, *w1, Residual::Laplacian, grad.as_deref_mut())?,
                boundary: squared_term(spec, params, boundary, bvals, *w2, Residual::Value, grad)?,
            }),
        }
    }

    pub fn terms(&self, spec: &MlpSpec, params: &ParamSet) -> Result<LossTerms> {
        self.eval_inner(spec, params, None)
    }

    pub fn loss(&self, spec: &MlpSpec, params: &ParamSet) -> Result<f64> {
        Ok(self.terms(spec, params)?.total())
    }

    /// Loss and its parameter gradient. The gradient is not checked; a
    /// non-finite loss is returned as is for the caller to report.
    pub fn loss_and_grad(&self, spec: &MlpSpec, params: &ParamSet) -> Result<(f64, ParamGradient)> {
        let mut g = ParamGradient::zeros(params.len());
        let terms = self.eval_inner(spec, params, Some(&mut g))?;
        Ok((terms.total(), g))
    }
}

/// `w₁·mean_{X_int}(f + ΔN)² + w₂·mean_{X_bdy}(g − N)²` for a Poisson problem.
pub fn pde_loss(
    spec: &MlpSpec,
    params: &ParamSet,
    problem: &Problem,
    interior: &PointSet,
    boundary: &PointSet,
    w1: f64,
    w2: f64,
) -> Result<LossTerms> {
    let p = problem.as_poisson().ok_or_else(|| Error::Config("pde_loss needs a Poisson problem".into()))?;
    let obj = Objective::Pde {
        interior: interior.coords.clone(),
        rhs: interior.map(|x| p.rhs(x)),
        boundary: boundary.coords.clone(),
        bvals: boundary.map(|x| p.boundary(x)),
        w1,
        w2,
    };
    obj.terms(spec, params)
}

/// `mean_X (N − u)²`.
pub fn regression_loss(spec: &MlpSpec, params: &ParamSet, target: &crate::problems::RegressionTarget, xs: &PointSet) -> Result<f64> {
    squared_term(spec, params, &xs.coords, &xs.map(|x| target.eval(x)), 1.0, Residual::Value, None)
}

/// Quantities recorded at one evaluation epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub epoch: usize,
    /// Loss of the parameters before the update of this epoch.
    pub loss: f64,
    pub best_loss: f64,
    /// Relative error on the interior training points.
    pub eps_u: Option<f64>,
    pub eps_f: Option<f64>,
    pub eps_u_test: Option<f64>,
    pub alpha_low: Option<f64>,
    pub alpha_high: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Metrics {
    eps_u: Option<f64>,
    eps_f: Option<f64>,
    eps_u_test: Option<f64>,
    alpha_low: Option<f64>,
    alpha_high: Option<f64>,
}

/// Error evaluation of sums of networks against the original problem.
struct Evaluator<'a> {
    interior: &'a PointSet,
    u_int: Option<Vec<f64>>,
    f_int: Option<Vec<f64>>,
    test: PointSet,
    u_test: Option<Vec<f64>>,
    periodic: Option<(PointSet, Vec<f64>)>,
    track_test: bool,
}

type Net<'a> = (&'a MlpSpec, &'a ParamSet);

fn sum_eval(nets: &[Net], coords: &[f64], order: Order) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut values: Vec<f64> = Vec::new();
    let mut laps: Vec<f64> = Vec::new();
    for (k, (spec, params)) in nets.iter().enumerate() {
        let j = evaluate(spec, params, coords, order)?;
        if k == 0 {
            values = j.values;
            laps = j.laps;
        } else {
            values.iter_mut().zip(&j.values).for_each(|(a, b)| *a += b);
            laps.iter_mut().zip(&j.laps).for_each(|(a, b)| *a += b);
        }
    }
    Ok((values, laps))
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a Problem, data: &'a TrainingData, config: &TrainConfig) -> Result<Self> {
        let interior = &data.interior;
        let exact = |ps: &PointSet| -> Option<Vec<f64>> { ps.iter().map(|x| problem.exact(x)).collect() };
        let test = uniform_grid(problem.domain(), config.test_count())?;
        let periodic = match problem {
            Problem::Regression(t) => {
                let g = periodic_grid(t.domain.lo[0], t.domain.hi[0], SPECTRUM_POINTS);
                let u = g.map(|x| t.eval(x));
                Some((g, u))
            }
            Problem::Poisson(_) => None,
        };
        Ok(Self {
            interior,
            u_int: exact(interior),
            f_int: problem.as_poisson().map(|p| interior.map(|x| p.rhs(x))),
            u_test: exact(&test),
            test,
            periodic,
            track_test: config.track_test_error,
        })
    }

    fn test_error(&self, nets: &[Net]) -> Result<Option<f64>> {
        match &self.u_test {
            Some(u) => Ok(Some(rel_l2_error(u, &sum_eval(nets, &self.test.coords, Order::Value)?.0)?)),
            None => Ok(None),
        }
    }

    fn residual_error(&self, nets: &[Net]) -> Result<Option<f64>> {
        match &self.f_int {
            Some(f) => Ok(Some(rel_residual_error(f, &sum_eval(nets, &self.interior.coords, Order::Laplacian)?.1)?)),
            None => Ok(None),
        }
    }

    fn metrics(&self, nets: &[Net]) -> Result<Metrics> {
        let order = if self.f_int.is_some() { Order::Laplacian } else { Order::Value };
        let (values, laps) = sum_eval(nets, &self.interior.coords, order)?;
        let mut m = Metrics {
            eps_u: self.u_int.as_ref().map(|u| rel_l2_error(u, &values)).transpose()?,
            eps_f: self.f_int.as_ref().map(|f| rel_residual_error(f, &laps)).transpose()?,
            ..Default::default()
        };
        if self.track_test {
            m.eps_u_test = self.test_error(nets)?;
        }
        if let Some((grid, u)) = &self.periodic {
            let n = sum_eval(nets, &grid.coords, Order::Value)?.0;
            let r: Vec<f64> = u.iter().zip(&n).map(|(a, b)| a - b).collect();
            let mag = |k| {
                let (re, im) = dft_coefficient(&r, k);
                re.hypot(im)
            };
            m.alpha_low = Some(mag(ALPHA_LOW_INDEX));
            m.alpha_high = Some(mag(ALPHA_HIGH_INDEX));
        }
        Ok(m)
    }
}

struct FitOutcome {
    final_params: ParamSet,
    best_params: ParamSet,
    best_epoch: usize,
    best_loss: f64,
    history: Vec<EvalRecord>,
}

/// Full-batch Adam for `epochs` steps. Losses are evaluated before every
/// step and once more after the last; the best parameters are tracked at
/// evaluation epochs only.
fn fit(
    spec: &MlpSpec,
    init: ParamSet,
    objective: &Objective,
    epochs: usize,
    lr: f64,
    eval_every: usize,
    metrics: &dyn Fn(&ParamSet) -> Result<Metrics>,
) -> Result<FitOutcome> {
    let mut params = init;
    let mut adam = AdamState::new(params.len(), lr);
    let mut best: Option<(ParamSet, usize, f64)> = None;
    let mut history = Vec::new();
    for epoch in 0..=epochs {
        let (loss, grad) = if epoch < epochs {
            objective.loss_and_grad(spec, &params)?
        } else {
            (objective.loss(spec, &params)?, ParamGradient::zeros(0))
        };
        if !loss.is_finite() || loss > DIVERGENCE_LIMIT {
            return Err(Error::Diverged { epoch, loss });
        }
        if epoch % eval_every == 0 || epoch == epochs {
            if best.as_ref().is_none_or(|b| loss < b.2) {
                best = Some((params.clone(), epoch, loss));
            }
            let m = metrics(&params)?;
            history.push(EvalRecord {
                epoch,
                loss,
                best_loss: best.as_ref().map_or(loss, |b| b.2),
                eps_u: m.eps_u,
                eps_f: m.eps_f,
                eps_u_test: m.eps_u_test,
                alpha_low: m.alpha_low,
                alpha_high: m.alpha_high,
            });
        }
        if epoch < epochs {
            adam.step(params.as_mut_slice(), grad.as_slice())?;
        }
    }
    let (best_params, best_epoch, best_loss) = best.expect("epoch 0 is always evaluated");
    Ok(FitOutcome { final_params: params, best_params, best_epoch, best_loss, history })
}

/// Outcome of the residual-correction stage.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualResult {
    pub spec: MlpSpec,
    pub final_params: ParamSet,
    pub best_params: ParamSet,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub w1: f64,
    pub history: Vec<EvalRecord>,
}

/// Outcome of one seed. Parameters are `θ_s`, valid on the original domain.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub scale_b: f64,
    pub spec: MlpSpec,
    pub final_params: ParamSet,
    pub best_params: ParamSet,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub w1: Option<f64>,
    pub history: Vec<EvalRecord>,
    /// Errors of the best parameters (and of the composite, if corrected).
    pub report: ErrorReport,
    /// `ε_u` of the best parameters on the interior training points.
    pub eps_u_train: Option<f64>,
    pub residual: Option<ResidualResult>,
    /// Seconds.
    pub wall_time: f64,
}

fn first_stage(config: &TrainConfig, seed: u64, scale: Option<f64>) -> Result<(RunResult, Problem, TrainingData)> {
    config.validate()?;
    let start = Instant::now();
    let problem = config.problem.build()?;
    let data = training_data(config, problem.domain(), seed)?;
    let (objective, b) = match scale {
        None => (Objective::for_problem(&problem, &data)?, 1.0),
        Some(b) => (Objective::for_problem(&problem.scaled(b)?, &data.scaled(b))?, b),
    };
    let spec = &config.network;
    let to_original = |hat: &ParamSet| match scale {
        None => hat.clone(),
        Some(b) => scale_back_materialize(spec, hat, b),
    };
    let eval = Evaluator::new(&problem, &data, config)?;
    let out = fit(
        spec,
        init_xavier_normal(spec, seed),
        &objective,
        config.epochs,
        config.lr,
        config.eval_every,
        &|hat| eval.metrics(&[(spec, &to_original(hat))]),
    )?;
    let best = to_original(&out.best_params);
    let net = [(spec, &best)];
    let report = ErrorReport {
        eps_u: eval.test_error(&net)?,
        eps_f: eval.residual_error(&net)?,
        ..Default::default()
    };
    let eps_u_train = eval.metrics(&net)?.eps_u;
    let result = RunResult {
        seed,
        scale_b: b,
        spec: spec.clone(),
        final_params: to_original(&out.final_params),
        best_params: best,
        best_epoch: out.best_epoch,
        best_loss: out.best_loss,
        w1: objective.w1(),
        history: out.history,
        report,
        eps_u_train,
        residual: None,
        wall_time: start.elapsed().as_secs_f64(),
    };
    Ok((result, problem, data))
}

/// Trains on the original domain. Requires `scale_b == 1`.
pub fn train(config: &TrainConfig, seed: u64) -> Result<RunResult> {
    if config.scale_b != 1.0 {
        return config_err("train() runs the unscaled pipeline; use train_scaled for scale_b > 1");
    }
    Ok(first_stage(config, seed, None)?.0)
}

/// Trains on `bΩ` with `b = config.scale_b` and maps the result back.
/// With `b = 1` this reproduces [`train`] bit for bit.
pub fn train_scaled(config: &TrainConfig, seed: u64) -> Result<RunResult> {
    Ok(first_stage(config, seed, Some(config.scale_b))?.0)
}

/// `N(x; θ_s) + N_r(x; θ_r)`.
pub fn composite_eval(spec_s: &MlpSpec, theta_s: &ParamSet, spec_r: &MlpSpec, theta_r: &ParamSet, x: &[f64]) -> Result<f64> {
    Ok(crate::network::forward(spec_s, theta_s, x)? + crate::network::forward(spec_r, theta_r, x)?)
}

/// Trains `N_r` for the residual equation of `θ_s` on the same training set.
///
/// Returns the correction stage and the composite errors
/// `(ε_u^r on the test grid, ε_f^r on the interior points)`.
pub fn residual_stage(
    config: &TrainConfig,
    seed: u64,
    problem: &Problem,
    data: &TrainingData,
    spec_s: &MlpSpec,
    theta_s: &ParamSet,
) -> Result<(ResidualResult, ErrorReport)> {
    let rc = config
        .residual
        .as_ref()
        .ok_or_else(|| Error::Config("no residual stage configured".into()))?;
    let p = problem
        .as_poisson()
        .ok_or_else(|| Error::Config("the residual stage applies to Poisson problems only".into()))?;
    if p.scale_b != 1.0 {
        return config_err("the residual stage runs on the original domain");
    }
    let bdy = data
        .boundary
        .as_ref()
        .ok_or_else(|| Error::Config("Poisson training needs boundary points".into()))?;
    let base = evaluate(spec_s, theta_s, &data.interior.coords, Order::Laplacian)?;
    let f = data.interior.map(|x| p.rhs(x));
    let rhs: Vec<f64> = f.iter().zip(&base.laps).map(|(f, l)| f + l).collect();
    let n_bdy = evaluate(spec_s, theta_s, &bdy.coords, Order::Value)?.values;
    let bvals: Vec<f64> = bdy.iter().zip(&n_bdy).map(|(x, n)| p.boundary(x) - n).collect();
    let r2: f64 = rhs.iter().map(|v| v * v).sum();
    let f2: f64 = f.iter().map(|v| v * v).sum();
    let w1 = if r2 <= RESIDUAL_NOISE_FLOOR * RESIDUAL_NOISE_FLOOR * f2 { 1.0 } else { weight_w1(&rhs)? };
    let objective = Objective::Pde {
        interior: data.interior.coords.clone(),
        rhs,
        boundary: bdy.coords.clone(),
        bvals,
        w1,
        w2: 1.0,
    };
    let spec_r = &rc.network;
    let eval = Evaluator::new(problem, data, config)?;
    let out = fit(
        spec_r,
        init_xavier_normal_stream(spec_r, seed, streams::RESIDUAL_INIT),
        &objective,
        rc.epochs,
        config.lr,
        config.eval_every,
        &|theta_r| eval.metrics(&[(spec_s, theta_s), (spec_r, theta_r)]),
    )?;
    let nets = [(spec_s, theta_s), (spec_r, &out.best_params)];
    let report = ErrorReport {
        eps_u_r: eval.test_error(&nets)?,
        eps_f_r: eval.residual_error(&nets)?,
        ..Default::default()
    };
    Ok((
        ResidualResult {
            spec: spec_r.clone(),
            final_params: out.final_params,
            best_params: out.best_params,
            best_epoch: out.best_epoch,
            best_loss: out.best_loss,
            w1,
            history: out.history,
        },
        report,
    ))
}

/// The full pipeline for one seed: scaled (or plain, for `b = 1`) training,
/// then the residual stage on the best-loss `θ_s` when configured.
pub fn run(config: &TrainConfig, seed: u64) -> Result<RunResult> {
    let start = Instant::now();
    let scale = (config.scale_b != 1.0).then_some(config.scale_b);
    let (mut result, problem, data) = first_stage(config, seed, scale)?;
    if config.residual.is_some() {
        let (res, report) = residual_stage(config, seed, &problem, &data, &result.spec, &result.best_params)?;
        result.report.eps_u_r = report.eps_u_r;
        result.report.eps_f_r = report.eps_f_r;
        result.residual = Some(res);
    }
    result.wall_time = start.elapsed().as_secs_f64();
    Ok(result)
}

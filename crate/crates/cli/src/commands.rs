//! `eval`, `spectrum` and `check`.

use std::io::Write;
use std::path::Path;

use mfpinn::autodiff::{evaluate, Order};
use mfpinn::checkpoint::Checkpoint;
use mfpinn::format::fmt_f64;
use mfpinn::metrics::{dft_amplitudes, rel_l2_error, rel_residual_error, ErrorReport, SpectrumReport};
use mfpinn::sampling::{periodic_grid, uniform_grid, PointSet};
use mfpinn::selfcheck::{self, CheckOutcome};
use mfpinn::{MlpSpec, ParamSet, Problem, ProblemSpec};
use serde::Serialize;

use crate::CliError;

/// A first-stage network, optionally with its residual correction.
pub struct Model {
    pub base: Checkpoint,
    pub residual: Option<Checkpoint>,
}

impl Model {
    pub fn load(ckpt: &Path, residual: Option<&Path>) -> Result<Self, CliError> {
        let load = |p: &Path| Checkpoint::load(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())));
        Ok(Self { base: load(ckpt)?, residual: residual.map(load).transpose()? })
    }

    fn nets(&self) -> Vec<(&MlpSpec, &ParamSet)> {
        let mut v = vec![(&self.base.header.spec, &self.base.params)];
        if let Some(r) = &self.residual {
            v.push((&r.header.spec, &r.params));
        }
        v
    }

    /// Values and, for `Order::Laplacian`, Laplacians of the summed networks.
    pub fn evaluate(&self, coords: &[f64], order: Order) -> Result<(Vec<f64>, Vec<f64>), CliError> {
        let mut values = vec![0.0; coords.len() / self.base.header.spec.input_dim];
        let mut laps = if order == Order::Laplacian { vec![0.0; values.len()] } else { Vec::new() };
        for (spec, params) in self.nets() {
            let j = evaluate(spec, params, coords, order)?;
            values.iter_mut().zip(&j.values).for_each(|(a, b)| *a += b);
            laps.iter_mut().zip(&j.laps).for_each(|(a, b)| *a += b);
        }
        Ok((values, laps))
    }

    /// The problem from the command line, else from the checkpoint header.
    pub fn problem(&self, given: Option<ProblemSpec>) -> Result<(ProblemSpec, Problem), CliError> {
        let spec = given
            .or_else(|| self.base.header.problem.clone())
            .ok_or_else(|| CliError::Config("checkpoint names no problem; pass --problem".into()))?;
        let problem = spec.build()?;
        for (net, _) in self.nets() {
            if net.input_dim != problem.dim() {
                return Err(CliError::Config(format!(
                    "checkpoint network takes {}D input, problem {} is {}D",
                    net.input_dim,
                    spec.label(),
                    problem.dim()
                )));
            }
        }
        Ok((spec, problem))
    }
}

/// Parses `regression`, `poisson1d`, `poisson2d` (with `n`) or `poisson2d_n5`.
pub fn parse_problem(name: &str, n: Option<usize>) -> Result<ProblemSpec, CliError> {
    match name {
        "regression" => Ok(ProblemSpec::Regression),
        "poisson1d" => Ok(ProblemSpec::Poisson1d),
        "poisson2d" => Ok(ProblemSpec::Poisson2d { n: n.unwrap_or(5) }),
        s => match s.strip_prefix("poisson2d_n").and_then(|k| k.parse().ok()) {
            Some(k) => Ok(ProblemSpec::Poisson2d { n: k }),
            None => Err(CliError::Config(format!("unknown problem {s:?}"))),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub problem: String,
    pub grid_points: usize,
    #[serde(flatten)]
    pub errors: ErrorReport,
}

/// Relative errors of a checkpoint on a uniform grid, optionally dumping
/// `(x, u, N, u − N)` rows.
pub fn eval_checkpoint(
    model: &Model,
    problem: Option<ProblemSpec>,
    grid: Option<usize>,
    dump: Option<&mut dyn Write>,
) -> Result<EvalReport, CliError> {
    let (spec, problem) = model.problem(problem)?;
    let count = grid.unwrap_or(if problem.dim() == 1 { 100_000 } else { 1_000_000 });
    let pts = uniform_grid(problem.domain(), count)?;
    let u: Option<Vec<f64>> = pts.iter().map(|x| problem.exact(x)).collect();
    let order = if problem.as_poisson().is_some() { Order::Laplacian } else { Order::Value };
    let (n, laps) = model.evaluate(&pts.coords, order)?;
    let eps_u = u.as_ref().map(|u| rel_l2_error(u, &n)).transpose()?;
    let eps_f = match problem.as_poisson() {
        Some(p) => Some(rel_residual_error(&pts.map(|x| p.rhs(x)), &laps)?),
        None => None,
    };
    let errors = if model.residual.is_some() {
        ErrorReport { eps_u_r: eps_u, eps_f_r: eps_f, ..Default::default() }
    } else {
        ErrorReport { eps_u, eps_f, ..Default::default() }
    };
    if let Some(w) = dump {
        write_dump(w, &pts, u.as_deref(), &n).map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(EvalReport { problem: spec.label(), grid_points: pts.len(), errors })
}

fn write_dump(w: &mut dyn Write, pts: &PointSet, u: Option<&[f64]>, n: &[f64]) -> std::io::Result<()> {
    let axes = ["x", "y"][..pts.dim].join(",");
    writeln!(w, "{axes},u,N,err")?;
    for (i, x) in pts.iter().enumerate() {
        let coords: Vec<String> = x.iter().map(|v| fmt_f64(*v)).collect();
        let (uu, e) = match u {
            Some(u) => (fmt_f64(u[i]), fmt_f64(u[i] - n[i])),
            None => (String::new(), String::new()),
        };
        writeln!(w, "{},{uu},{},{e}", coords.join(","), fmt_f64(n[i]))?;
    }
    Ok(())
}

/// DFT magnitudes of `u − N` on `n` periodic grid points over the 1D domain.
pub fn spectrum(model: &Model, problem: Option<ProblemSpec>, n: usize, low: usize, high: usize) -> Result<SpectrumReport, CliError> {
    let (spec, problem) = model.problem(problem)?;
    if problem.dim() != 1 {
        return Err(CliError::Config(format!("spectra are defined for 1D problems only, {} is 2D", spec.label())));
    }
    let dom = problem.domain();
    let pts = periodic_grid(dom.lo[0], dom.hi[0], n);
    let u: Vec<f64> = pts
        .iter()
        .map(|x| problem.exact(x))
        .collect::<Option<_>>()
        .ok_or_else(|| CliError::Config("problem has no exact solution".into()))?;
    let (vals, _) = model.evaluate(&pts.coords, Order::Value)?;
    let r: Vec<f64> = u.iter().zip(&vals).map(|(a, b)| a - b).collect();
    Ok(dft_amplitudes(&r, low, high)?)
}

/// Finite-difference checks on `nets` random networks.
pub fn check(nets: usize, seed: u64) -> Result<Vec<CheckOutcome>, CliError> {
    Ok(selfcheck::run_all(nets, seed)?)
}

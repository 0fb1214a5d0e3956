//! Seed batteries: run every variant × seed, write per-run artifacts and the
//! aggregate table.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mfpinn::checkpoint::{Checkpoint, CheckpointHeader};
use mfpinn::format::{fmt_f64, fmt_opt};
use mfpinn::metrics::{aggregate, MeanStd};
use mfpinn::training::{run, EvalRecord, RunResult, TrainConfig};
use mfpinn::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{config_hash, ExperimentConfig};
use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub jobs: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub seed_offset: u64,
    pub epochs_override: Option<usize>,
}

/// Per-run JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub variant: String,
    pub config_hash: String,
    pub seed: u64,
    pub scale_b: f64,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub eps_u: Option<f64>,
    pub eps_f: Option<f64>,
    pub eps_u_r: Option<f64>,
    pub eps_f_r: Option<f64>,
    pub eps_u_train: Option<f64>,
    pub residual_best_epoch: Option<usize>,
    pub residual_best_loss: Option<f64>,
    pub wall_time: f64,
}

#[derive(Debug)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub table: PathBuf,
    pub summaries: Vec<RunSummary>,
    /// `(variant, seed, error)` of failed runs.
    pub failures: Vec<(String, u64, Error)>,
}

impl Outcome {
    pub fn diverged(&self) -> bool {
        !self.failures.is_empty()
    }
}

pub fn resolve_out_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    opts.out_dir
        .clone()
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| Path::new("results").join(&cfg.label))
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let out_dir = resolve_out_dir(cfg, opts);
    fs::create_dir_all(&out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;

    let mut jobs = Vec::new();
    for v in &cfg.variants {
        let tc = cfg.resolve(v, opts.seed_offset, opts.epochs_override)?;
        for &seed in &tc.seeds {
            jobs.push((v.name.clone(), tc.clone(), seed));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let results: Vec<_> = pool.install(|| {
        jobs.par_iter()
            .map(|(variant, tc, seed)| {
                let r = run(tc, *seed);
                match &r {
                    Ok(res) => eprintln!(
                        "{}/{variant} seed {seed}: eps_u {} eps_f {} eps_u_r {} ({:.1}s)",
                        cfg.label,
                        fmt_opt(res.report.eps_u),
                        fmt_opt(res.report.eps_f),
                        fmt_opt(res.report.eps_u_r),
                        res.wall_time
                    ),
                    Err(e) => eprintln!("{}/{variant} seed {seed}: {e}", cfg.label),
                }
                let written = r.as_ref().ok().map(|res| write_run(&out_dir, &cfg.label, variant, tc, res));
                (r, written)
            })
            .collect()
    });

    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for ((variant, _, seed), (r, written)) in jobs.iter().zip(results) {
        match r {
            Ok(_) => summaries.push(written.expect("written for successful runs")?),
            Err(e @ (Error::Diverged { .. } | Error::NonFiniteGradient { .. } | Error::Numerical(_))) => {
                failures.push((variant.clone(), *seed, e))
            }
            Err(e) => return Err(e.into()),
        }
    }
    let residual = cfg.train.residual.is_some();
    let names: Vec<&str> = cfg.variants.iter().map(|v| v.name.as_str()).collect();
    let table = out_dir.join(format!("{}_table.csv", cfg.label));
    write_table(&table, &names, &summaries, residual)?;
    Ok(Outcome { out_dir, table, summaries, failures })
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(path, e))
}

pub fn write_history(path: &Path, history: &[EvalRecord]) -> Result<(), CliError> {
    write_file(path, |w| {
        writeln!(w, "epoch,loss,best_loss,eps_u,eps_f,eps_u_test,alpha_low,alpha_high")?;
        for h in history {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                h.epoch,
                fmt_f64(h.loss),
                fmt_f64(h.best_loss),
                fmt_opt(h.eps_u),
                fmt_opt(h.eps_f),
                fmt_opt(h.eps_u_test),
                fmt_opt(h.alpha_low),
                fmt_opt(h.alpha_high)
            )?;
        }
        Ok(())
    })
}

fn save_ckpt(path: &Path, ckpt: Checkpoint) -> Result<(), CliError> {
    ckpt.save(path).map_err(|e| io_err(path, e))
}

fn write_run(dir: &Path, label: &str, variant: &str, tc: &TrainConfig, r: &RunResult) -> Result<RunSummary, CliError> {
    let stem = format!("{label}_{variant}_seed{}", r.seed);
    let file = |suffix: &str| dir.join(format!("{stem}{suffix}"));
    let final_loss = |h: &[EvalRecord]| h.last().map_or(f64::NAN, |e| e.loss);
    let header = |spec: &mfpinn::MlpSpec, epoch, loss| CheckpointHeader {
        spec: spec.clone(),
        seed: r.seed,
        epoch,
        loss,
        problem: Some(tc.problem.clone()),
    };

    write_history(&file("_history.csv"), &r.history)?;
    save_ckpt(
        &file("_best.ckpt"),
        Checkpoint { header: header(&r.spec, r.best_epoch, r.best_loss), params: r.best_params.clone() },
    )?;
    save_ckpt(
        &file("_final.ckpt"),
        Checkpoint { header: header(&r.spec, tc.epochs, final_loss(&r.history)), params: r.final_params.clone() },
    )?;
    if let Some(res) = &r.residual {
        write_history(&file("_residual_history.csv"), &res.history)?;
        save_ckpt(
            &file("_residual_best.ckpt"),
            Checkpoint { header: header(&res.spec, res.best_epoch, res.best_loss), params: res.best_params.clone() },
        )?;
        let epochs = res.history.last().map_or(0, |h| h.epoch);
        save_ckpt(
            &file("_residual_final.ckpt"),
            Checkpoint { header: header(&res.spec, epochs, final_loss(&res.history)), params: res.final_params.clone() },
        )?;
    }

    let summary = RunSummary {
        label: label.to_string(),
        variant: variant.to_string(),
        config_hash: config_hash(tc),
        seed: r.seed,
        scale_b: r.scale_b,
        best_epoch: r.best_epoch,
        best_loss: r.best_loss,
        eps_u: r.report.eps_u,
        eps_f: r.report.eps_f,
        eps_u_r: r.report.eps_u_r,
        eps_f_r: r.report.eps_f_r,
        eps_u_train: r.eps_u_train,
        residual_best_epoch: r.residual.as_ref().map(|x| x.best_epoch),
        residual_best_loss: r.residual.as_ref().map(|x| x.best_loss),
        wall_time: r.wall_time,
    };
    let path = file(".json");
    let json = serde_json::to_string_pretty(&summary).map_err(|e| io_err(&path, e))?;
    fs::write(&path, json + "\n").map_err(|e| io_err(&path, e))?;
    Ok(summary)
}

fn stats(values: Vec<Option<f64>>) -> Option<MeanStd> {
    let v: Option<Vec<f64>> = values.into_iter().collect();
    v.and_then(|v| aggregate(&v).ok())
}

/// One row per variant: mean and sample std of each metric over seeds.
/// A cell is empty when the metric does not apply or fewer than two runs
/// of the variant finished.
pub fn write_table(path: &Path, variants: &[&str], runs: &[RunSummary], residual: bool) -> Result<(), CliError> {
    let mut metrics: Vec<(&str, fn(&RunSummary) -> Option<f64>)> =
        vec![("eps_u", |s| s.eps_u), ("eps_f", |s| s.eps_f)];
    if residual {
        metrics.push(("eps_u_r", |s| s.eps_u_r));
        metrics.push(("eps_f_r", |s| s.eps_f_r));
    }
    write_file(path, |w| {
        let mut header = vec!["variant".to_string()];
        for (m, _) in &metrics {
            header.push(format!("{m}_mean"));
            header.push(format!("{m}_std"));
        }
        writeln!(w, "{}", header.join(","))?;
        for name in variants {
            let mine: Vec<&RunSummary> = runs.iter().filter(|s| s.variant == *name).collect();
            let mut row = vec![name.to_string()];
            for (_, get) in &metrics {
                let s = stats(mine.iter().map(|r| get(r)).collect());
                row.push(fmt_opt(s.map(|s| s.mean)));
                row.push(fmt_opt(s.map(|s| s.std)));
            }
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    })
}

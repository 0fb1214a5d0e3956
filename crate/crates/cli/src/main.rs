use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mfpinn::format::fmt_f64;
use mfpinn_cli::commands::{self, parse_problem, Model};
use mfpinn_cli::config::ExperimentConfig;
use mfpinn_cli::experiment::{run_experiment, RunOptions};
use mfpinn_cli::CliError;

#[derive(Parser)]
#[command(name = "mfpinn", version, about = "Domain-scaled PINNs with residual correction")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run every variant × seed of an experiment config.
    Run {
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory.
        #[arg(long, env = "MFP_OUT")]
        out: Option<PathBuf>,
        /// Added to every configured seed.
        #[arg(long, default_value_t = 0)]
        seed_offset: u64,
        /// Replaces the epoch count of both training stages.
        #[arg(long)]
        epochs_override: Option<usize>,
    },
    /// Relative errors of a checkpoint on a uniform grid.
    Eval {
        checkpoint: PathBuf,
        /// regression, poisson1d, poisson2d or poisson2d_n<k>; defaults to the checkpoint's.
        #[arg(long)]
        problem: Option<String>,
        /// Number of terms for poisson2d.
        #[arg(long)]
        n: Option<usize>,
        /// Grid size (a perfect square in 2D).
        #[arg(long)]
        grid: Option<usize>,
        /// Residual-correction checkpoint to add.
        #[arg(long)]
        residual: Option<PathBuf>,
        /// Write (x, u, N, u − N) rows here.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// DFT magnitudes of the error u − N on a periodic 1D grid.
    Spectrum {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long)]
        problem: Option<String>,
        #[arg(long)]
        residual: Option<PathBuf>,
        /// CSV destination (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        low: usize,
        #[arg(long, default_value_t = 50)]
        high: usize,
    },
    /// Finite-difference checks of the derivative code.
    Check {
        #[arg(long, default_value_t = 50)]
        nets: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn io_err(e: impl std::fmt::Display) -> CliError {
    CliError::Io(e.to_string())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    match cli.cmd {
        Cmd::Run { config, jobs, out, seed_offset, epochs_override } => {
            let cfg = ExperimentConfig::load(&config)?;
            let opts = RunOptions { jobs, out_dir: out, seed_offset, epochs_override };
            let outcome = run_experiment(&cfg, &opts)?;
            println!("{}", outcome.table.display());
            if outcome.diverged() {
                for (v, s, e) in &outcome.failures {
                    eprintln!("failed: {v} seed {s}: {e}");
                }
                return Ok(3);
            }
            Ok(0)
        }
        Cmd::Eval { checkpoint, problem, n, grid, residual, dump } => {
            let model = Model::load(&checkpoint, residual.as_deref())?;
            let problem = problem.map(|p| parse_problem(&p, n)).transpose()?;
            let report = match dump {
                Some(path) => {
                    let mut w = io::BufWriter::new(fs::File::create(&path).map_err(io_err)?);
                    let r = commands::eval_checkpoint(&model, problem, grid, Some(&mut w))?;
                    w.flush().map_err(io_err)?;
                    r
                }
                None => commands::eval_checkpoint(&model, problem, grid, None)?,
            };
            println!("{}", serde_json::to_string_pretty(&report).map_err(io_err)?);
            Ok(0)
        }
        Cmd::Spectrum { checkpoint, n, problem, residual, out, low, high } => {
            let model = Model::load(&checkpoint, residual.as_deref())?;
            let problem = problem.map(|p| parse_problem(&p, None)).transpose()?;
            let report = commands::spectrum(&model, problem, n, low, high)?;
            match out {
                Some(path) => {
                    report.write_csv(io::BufWriter::new(fs::File::create(&path).map_err(io_err)?))?;
                    println!("alpha_low={} alpha_high={}", fmt_f64(report.alpha_low), fmt_f64(report.alpha_high));
                }
                None => {
                    report.write_csv(io::stdout().lock())?;
                    eprintln!("alpha_low={} alpha_high={}", fmt_f64(report.alpha_low), fmt_f64(report.alpha_high));
                }
            }
            Ok(0)
        }
        Cmd::Check { nets, seed } => {
            let mut ok = true;
            for c in commands::check(nets, seed)? {
                let status = if c.passed() { "PASS" } else { "FAIL" };
                println!("{status} {}: rel. error {} (tolerance {})", c.name, fmt_f64(c.rel_error), fmt_f64(c.tolerance));
                ok &= c.passed();
            }
            Ok(if ok { 0 } else { 1 })
        }
    }
}

//! Relative errors, DFT amplitudes of error sequences and seed aggregation.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::format::fmt_f64;

/// `sqrt(Σ(u − N)² / Σu²)`.
pub fn rel_l2_error(u: &[f64], n: &[f64]) -> Result<f64> {
    if u.len() != n.len() {
        return config_err("rel_l2_error: length mismatch");
    }
    let den: f64 = u.iter().map(|v| v * v).sum();
    if den == 0.0 {
        return Err(Error::UndefinedMetric("reference solution has zero norm"));
    }
    let num: f64 = u.iter().zip(n).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((num / den).sqrt())
}

/// `sqrt(Σ(f + ΔN)² / Σf²)`.
pub fn rel_residual_error(f: &[f64], lap_n: &[f64]) -> Result<f64> {
    if f.len() != lap_n.len() {
        return config_err("rel_residual_error: length mismatch");
    }
    let den: f64 = f.iter().map(|v| v * v).sum();
    if den == 0.0 {
        return Err(Error::UndefinedMetric("right-hand side has zero norm"));
    }
    let num: f64 = f.iter().zip(lap_n).map(|(a, b)| (a + b) * (a + b)).sum();
    Ok((num / den).sqrt())
}

/// Relative errors of a first-stage solution and, when present, of the
/// residual-corrected composite `U = N + N_r`.
///
/// In run summaries `eps_u*` are measured on the test grid and `eps_f*` on
/// the interior training points.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub eps_u: Option<f64>,
    pub eps_f: Option<f64>,
    pub eps_u_r: Option<f64>,
    pub eps_f_r: Option<f64>,
}

/// Unnormalized DFT magnitudes of a real sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub amplitudes: Vec<f64>,
    pub low_index: usize,
    pub high_index: usize,
    pub alpha_low: f64,
    pub alpha_high: f64,
}

impl SpectrumReport {
    /// Rows `k,magnitude`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,magnitude")?;
        for (k, a) in self.amplitudes.iter().enumerate() {
            writeln!(w, "{k},{}", fmt_f64(*a))?;
        }
        Ok(())
    }
}

// cos/sin of 2πm/N, built so that entry N−m is the exact conjugate of m.
fn twiddles(n: usize) -> Vec<(f64, f64)> {
    let mut t = vec![(0.0, 0.0); n];
    for m in 0..=n / 2 {
        let theta = 2.0 * PI * m as f64 / n as f64;
        t[m] = (theta.cos(), theta.sin());
    }
    for m in n / 2 + 1..n {
        let (c, s) = t[n - m];
        t[m] = (c, -s);
    }
    t
}

fn coefficient(r: &[f64], k: usize, table: &[(f64, f64)]) -> (f64, f64) {
    let n = r.len();
    let (mut re, mut im) = (0.0, 0.0);
    let mut idx = 0;
    for &rj in r {
        let (c, s) = table[idx];
        re += rj * c;
        im -= rj * s;
        idx += k;
        if idx >= n {
            idx -= n;
        }
    }
    (re, im)
}

/// `F_k = Σ_j r_j e^{-i2πkj/N}` for a single `k`.
pub fn dft_coefficient(r: &[f64], k: usize) -> (f64, f64) {
    coefficient(r, k % r.len().max(1), &twiddles(r.len()))
}

/// `|F_k|` for `k = 0..N`, with `alpha_low = |F_low|`, `alpha_high = |F_high|`.
pub fn dft_amplitudes(residuals: &[f64], low: usize, high: usize) -> Result<SpectrumReport> {
    let n = residuals.len();
    if n < 2 {
        return config_err("DFT needs at least two samples");
    }
    if low >= n || high >= n {
        return config_err(format!("frequency indices {low}/{high} out of range for N = {n}"));
    }
    let table = twiddles(n);
    let amplitudes: Vec<f64> = (0..n)
        .map(|k| {
            let (re, im) = coefficient(residuals, k, &table);
            re.hypot(im)
        })
        .collect();
    Ok(SpectrumReport {
        alpha_low: amplitudes[low],
        alpha_high: amplitudes[high],
        amplitudes,
        low_index: low,
        high_index: high,
    })
}

/// Fails unless `xs` is strictly increasing with constant spacing.
pub fn check_uniform_spacing(xs: &[f64]) -> Result<()> {
    if xs.len() < 2 {
        return config_err("spacing check needs at least two samples");
    }
    let h = xs[1] - xs[0];
    let tol = 1e-9 * h.abs().max(f64::MIN_POSITIVE);
    if !(h > 0.0) || xs.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > tol) {
        return config_err("samples are not on an ordered uniform grid");
    }
    Ok(())
}

/// DFT amplitudes of residuals sampled at the ordered uniform points `xs`.
pub fn spectrum_on_grid(xs: &[f64], residuals: &[f64], low: usize, high: usize) -> Result<SpectrumReport> {
    check_uniform_spacing(xs)?;
    if xs.len() != residuals.len() {
        return config_err("sample positions and residuals differ in length");
    }
    dft_amplitudes(residuals, low, high)
}

/// Arithmetic mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Mean and standard deviation (divisor `n − 1`) of at least two values.
pub fn aggregate(values: &[f64]) -> Result<MeanStd> {
    if values.len() < 2 {
        return config_err(format!("aggregation needs at least 2 values, got {}", values.len()));
    }
    if values.iter().all(|v| *v == values[0]) {
        return Ok(MeanStd { mean: values[0], std: 0.0 });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(MeanStd { mean, std: var.sqrt() })
}

/// Per-metric aggregates over runs; a metric is aggregated only if every
/// report has it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub runs: usize,
    pub eps_u: Option<MeanStd>,
    pub eps_f: Option<MeanStd>,
    pub eps_u_r: Option<MeanStd>,
    pub eps_f_r: Option<MeanStd>,
}

pub fn aggregate_reports(reports: &[ErrorReport]) -> Result<AggregateReport> {
    if reports.len() < 2 {
        return config_err(format!("aggregation needs at least 2 reports, got {}", reports.len()));
    }
    let pick = |get: fn(&ErrorReport) -> Option<f64>| -> Result<Option<MeanStd>> {
        let vals: Option<Vec<f64>> = reports.iter().map(get).collect();
        vals.map(|v| aggregate(&v)).transpose()
    };
    Ok(AggregateReport {
        runs: reports.len(),
        eps_u: pick(|r| r.eps_u)?,
        eps_f: pick(|r| r.eps_f)?,
        eps_u_r: pick(|r| r.eps_u_r)?,
        eps_f_r: pick(|r| r.eps_f_r)?,
    })
}

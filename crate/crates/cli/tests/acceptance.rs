//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. The 2D run and the six-seed residual check only
//! run with `MFP_ACCEPTANCE_EXTENDED=1`.

use std::f64::consts::PI;
use std::fs;
use std::ops::{Add, Mul};
use std::path::{Path, PathBuf};
use std::time::Instant;

use mfpinn::autodiff::{jet_forward, loss_param_gradient, JetSeeds, Order};
use mfpinn::metrics::dft_amplitudes;
use mfpinn::network::{init_xavier_normal, MlpSpec, ParamSet};
use mfpinn::problems::scale_back_materialize;
use mfpinn::training::{pde_loss, train, train_scaled, training_data, weight_w1, Objective, TrainConfig};
use mfpinn::{Activation, ActivationKind, ProblemSpec};
use mfpinn_cli::config::ExperimentConfig;
use mfpinn_cli::experiment::{run_experiment, RunOptions, RunSummary};

type Verdict = Result<(bool, String), String>;

// ---------------------------------------------------------------------------
// independent scalar evaluator with second-order forward derivatives

#[derive(Clone, Copy, Debug)]
struct D2 {
    v: f64,
    d: f64,
    dd: f64,
}

impl D2 {
    fn c(v: f64) -> Self {
        D2 { v, d: 0.0, dd: 0.0 }
    }
    fn chain(self, f: f64, f1: f64, f2: f64) -> Self {
        D2 { v: f, d: f1 * self.d, dd: f2 * self.d * self.d + f1 * self.dd }
    }
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        self.chain(t, 1.0 - t * t, -2.0 * t * (1.0 - t * t))
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln_1p(self) -> Self {
        let q = 1.0 / (1.0 + self.v);
        self.chain(self.v.ln_1p(), q, -q * q)
    }
}

impl Add for D2 {
    type Output = D2;
    fn add(self, o: D2) -> D2 {
        D2 { v: self.v + o.v, d: self.d + o.d, dd: self.dd + o.dd }
    }
}

impl Mul for D2 {
    type Output = D2;
    fn mul(self, o: D2) -> D2 {
        D2 { v: self.v * o.v, d: self.d * o.v + self.v * o.d, dd: self.dd * o.v + 2.0 * self.d * o.d + self.v * o.dd }
    }
}

fn act(a: Activation, z: D2) -> D2 {
    match a.kind {
        ActivationKind::Tanh => z.tanh(),
        ActivationKind::Mish => z * z.exp().ln_1p().tanh(),
        ActivationKind::Sin => (D2::c(a.scale) * z).sin(),
    }
}

// layer by layer: out × in weights (row-major), then biases; linear readout
fn oracle(spec: &MlpSpec, p: &[f64], x: &[D2]) -> D2 {
    let mut h = x.to_vec();
    let mut off = 0;
    for layer in 0..=spec.hidden_layers {
        let out = if layer < spec.hidden_layers { spec.width } else { 1 };
        let n_in = h.len();
        let next: Vec<D2> = (0..out)
            .map(|j| {
                let mut z = D2::c(p[off + out * n_in + j]);
                for (i, hi) in h.iter().enumerate() {
                    z = z + D2::c(p[off + j * n_in + i]) * *hi;
                }
                if layer < spec.hidden_layers { act(spec.activation, z) } else { z }
            })
            .collect();
        off += out * n_in + out;
        h = next;
    }
    assert_eq!(off, p.len(), "parameter layout");
    h[0]
}

fn value(spec: &MlpSpec, p: &[f64], x: &[f64]) -> f64 {
    oracle(spec, p, &x.iter().map(|v| D2::c(*v)).collect::<Vec<_>>()).v
}

fn oracle_lap(spec: &MlpSpec, p: &[f64], x: &[f64]) -> (f64, f64) {
    let mut lap = 0.0;
    let mut v = 0.0;
    for axis in 0..x.len() {
        let xs: Vec<D2> = x.iter().enumerate().map(|(i, &c)| D2 { v: c, d: (i == axis) as u8 as f64, dd: 0.0 }).collect();
        let o = oracle(spec, p, &xs);
        v = o.v;
        lap += o.dd;
    }
    (v, lap)
}

fn lcg(seed: u64) -> impl FnMut() -> f64 {
    let mut s = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
    move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    norm(a.iter().zip(b).map(|(x, y)| x - y)) / norm(b.iter().copied()).max(1e-300)
}

// ---------------------------------------------------------------------------

fn random_net(k: usize) -> MlpSpec {
    let acts = [Activation::tanh(), Activation::mish(), Activation::sin(1.0), Activation::sin(2.0), Activation::sin(5.0)];
    MlpSpec::new(1 + k % 2, 1 + k % 3, 5 + (7 * k) % 16, acts[k % acts.len()])
}

fn derivative_oracles() -> Verdict {
    let (mut worst_grad, mut worst_lap, mut worst_theta) = (0.0f64, 0.0f64, 0.0f64);
    let h = 1e-3;
    for k in 0..50 {
        let spec = random_net(k);
        let d = spec.input_dim;
        let p = init_xavier_normal(&spec, 1000 + k as u64);
        let mut rnd = lcg(k as u64);
        let pts: Vec<Vec<f64>> = (0..5).map(|_| (0..d).map(|_| 2.0 * rnd() - 1.0).collect()).collect();

        let (mut jg, mut fg, mut jl, mut fl) = (vec![], vec![], vec![], vec![]);
        for x in &pts {
            let jet = jet_forward(&spec, &p, x).map_err(|e| e.to_string())?;
            let mut lap = 0.0;
            for i in 0..d {
                let n = |t: f64| {
                    let mut y = x.clone();
                    y[i] += t;
                    value(&spec, &p.0, &y)
                };
                fg.push((8.0 * (n(h) - n(-h)) - (n(2.0 * h) - n(-2.0 * h))) / (12.0 * h));
                lap += (-n(2.0 * h) + 16.0 * n(h) - 30.0 * n(0.0) + 16.0 * n(-h) - n(-2.0 * h)) / (12.0 * h * h);
                jg.push(jet.spatial_grad[i]);
            }
            fl.push(lap);
            jl.push(jet.spatial_lap);
        }
        worst_grad = worst_grad.max(rel(&jg, &fg));
        worst_lap = worst_lap.max(rel(&jl, &fl));

        // mean (g + ΔN)² + mean N² over the points
        let g = |x: &[f64]| (2.0 * x[0]).sin() + x.get(1).copied().unwrap_or(0.0);
        let coords: Vec<f64> = pts.concat();
        let m = pts.len() as f64;
        let oracle_loss = |q: &[f64]| {
            pts.iter()
                .map(|x| {
                    let (v, l) = oracle_lap(&spec, q, x);
                    ((g(x) + l).powi(2) + v * v) / m
                })
                .sum::<f64>()
        };
        let (_, grad) = loss_param_gradient(&spec, &p, &coords, Order::Laplacian, |b| {
            let r: Vec<f64> = pts.iter().zip(&b.laps).map(|(x, l)| g(x) + l).collect();
            let loss = r.iter().zip(&b.values).map(|(r, v)| (r * r + v * v) / m).sum();
            let seeds = JetSeeds {
                value: b.values.iter().map(|v| 2.0 * v / m).collect(),
                lap: r.iter().map(|r| 2.0 * r / m).collect(),
                ..Default::default()
            };
            (loss, seeds)
        })
        .map_err(|e| e.to_string())?;
        let ht = 1e-5;
        let fd: Vec<f64> = (0..p.len())
            .map(|i| {
                let mut q = p.0.clone();
                q[i] += ht;
                let up = oracle_loss(&q);
                q[i] -= 2.0 * ht;
                (up - oracle_loss(&q)) / (2.0 * ht)
            })
            .collect();
        worst_theta = worst_theta.max(rel(&grad.0, &fd));
    }
    Ok((
        worst_grad < 1e-5 && worst_lap < 1e-5 && worst_theta < 1e-4,
        format!(
            "50 nets: gradient rel {worst_grad:.2e}, Laplacian rel {worst_lap:.2e} (< 1e-5); parameter gradient rel {worst_theta:.2e} (< 1e-4)"
        ),
    ))
}

fn problem_consistency() -> Verdict {
    let mut worst = 0.0f64;
    let mut parts = vec![];
    for spec in [ProblemSpec::Poisson1d, ProblemSpec::Poisson2d { n: 1 }, ProblemSpec::Poisson2d { n: 5 }, ProblemSpec::Poisson2d { n: 6 }] {
        let problem = spec.build().map_err(|e| e.to_string())?;
        let p = problem.as_poisson().expect("poisson");
        let dom = problem.domain();
        let mut rnd = lcg(42);
        let h = 1e-4;
        let (mut res, mut f) = (vec![], vec![]);
        for _ in 0..100 {
            let x: Vec<f64> = (0..dom.dim()).map(|i| dom.lo[i] + (dom.hi[i] - dom.lo[i]) * (0.01 + 0.98 * rnd())).collect();
            let mut lap = 0.0;
            for i in 0..x.len() {
                let u = |t: f64| {
                    let mut y = x.clone();
                    y[i] += t;
                    problem.exact(&y).unwrap()
                };
                lap += (-u(2.0 * h) + 16.0 * u(h) - 30.0 * u(0.0) + 16.0 * u(-h) - u(-2.0 * h)) / (12.0 * h * h);
            }
            f.push(p.rhs(&x));
            res.push(-lap - p.rhs(&x));
        }
        let e = norm(res.iter().copied()) / norm(f.iter().copied());
        worst = worst.max(e);
        parts.push(format!("{} {e:.1e}", spec.label()));
    }
    Ok((worst < 1e-6, format!("‖−Δu − f‖/‖f‖ at 100 points: {} (< 1e-6)", parts.join(", "))))
}

fn small_config(problem: ProblemSpec) -> TrainConfig {
    let d = problem.dim();
    let mut c = TrainConfig::new(problem, MlpSpec::new(d, 2, 10, Activation::sin(1.0)), 25);
    c.interior_count = 100;
    c.boundary_count = Some(if d == 1 { 2 } else { 40 });
    c.test_count = Some(if d == 1 { 1000 } else { 900 });
    c.eval_every = 5;
    c
}

fn scaling_exactness() -> Verdict {
    let (mut worst_v, mut worst_l) = (0.0f64, 0.0f64);
    for k in 0..12 {
        let spec = random_net(k);
        let hat = init_xavier_normal(&spec, 500 + k as u64);
        for b in [2.0 * PI, 16.0 * PI, 50.0 * PI] {
            let theta = scale_back_materialize(&spec, &hat, b);
            let mut rnd = lcg(k as u64 + 7);
            let (mut ls, mut lh) = (vec![], vec![]);
            for _ in 0..20 {
                let x: Vec<f64> = (0..spec.input_dim).map(|_| rnd()).collect();
                let xh: Vec<f64> = x.iter().map(|v| b * v).collect();
                let s = jet_forward(&spec, &theta, &x).map_err(|e| e.to_string())?;
                let n = jet_forward(&spec, &hat, &xh).map_err(|e| e.to_string())?;
                worst_v = worst_v.max((s.value - n.value).abs());
                ls.push(s.spatial_lap);
                lh.push(b * b * n.spatial_lap);
            }
            worst_l = worst_l.max(rel(&ls, &lh));
        }
    }
    let mut bitwise = true;
    for problem in [ProblemSpec::Regression, ProblemSpec::Poisson1d, ProblemSpec::Poisson2d { n: 2 }] {
        let c = small_config(problem);
        for seed in 0..2 {
            let a = train(&c, seed).map_err(|e| e.to_string())?;
            let s = train_scaled(&c, seed).map_err(|e| e.to_string())?;
            bitwise &= a.best_params == s.best_params
                && a.final_params == s.final_params
                && a.history == s.history
                && a.report == s.report;
        }
    }
    Ok((
        worst_v <= 1e-10 && worst_l <= 1e-8 && bitwise,
        format!("max |N − N̂| {worst_v:.1e} (≤ 1e-10), Laplacian rel {worst_l:.1e} (≤ 1e-8), b = 1 bitwise identical: {bitwise}"),
    ))
}

fn loss_normalization() -> Verdict {
    let mut worst = 0.0f64;
    for problem in [ProblemSpec::Poisson1d, ProblemSpec::Poisson2d { n: 5 }, ProblemSpec::Poisson2d { n: 6 }] {
        let d = problem.dim();
        let spec = MlpSpec::new(d, 4, 20, Activation::sin(1.0));
        let zero = ParamSet::zeros(&spec);
        let c = TrainConfig::new(problem.clone(), spec.clone(), 1);
        let p = problem.build().map_err(|e| e.to_string())?;
        let pp = p.as_poisson().expect("poisson");
        for seed in 0..3 {
            let data = training_data(&c, p.domain(), seed).map_err(|e| e.to_string())?;
            let w1 = weight_w1(&data.interior.map(|x| pp.rhs(x))).map_err(|e| e.to_string())?;
            let t = pde_loss(&spec, &zero, &p, &data.interior, data.boundary.as_ref().unwrap(), w1, 1.0).map_err(|e| e.to_string())?;
            worst = worst.max((t.interior - 1.0).abs());
            let b = 16.0 * PI;
            let scaled = p.scaled(b).map_err(|e| e.to_string())?;
            let obj = Objective::for_problem(&scaled, &data.scaled(b)).map_err(|e| e.to_string())?;
            worst = worst.max((obj.terms(&spec, &zero).map_err(|e| e.to_string())?.interior - 1.0).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max |interior term − 1| {worst:.1e} over 3 problems × 3 seeds, plain and scaled (≤ 1e-12)")))
}

fn dft_exactness() -> Verdict {
    let n = 1000;
    let (mut peak_err, mut leak) = (0.0f64, 0.0f64);
    for k0 in [1usize, 2, 7, 50, 123, 499] {
        let r: Vec<f64> = (0..n).map(|i| (2.0 * PI * (k0 * i) as f64 / n as f64).sin()).collect();
        let s = dft_amplitudes(&r, 2, 50).map_err(|e| e.to_string())?;
        for (k, a) in s.amplitudes.iter().enumerate() {
            if k == k0 || k == n - k0 {
                peak_err = peak_err.max((a - n as f64 / 2.0).abs());
            } else {
                leak = leak.max(*a);
            }
        }
    }
    let mut parseval = 0.0f64;
    for len in [1000usize, 997, 64] {
        let mut rnd = lcg(len as u64);
        let r: Vec<f64> = (0..len).map(|_| 2.0 * rnd() - 1.0).collect();
        let s = dft_amplitudes(&r, 1, 2).map_err(|e| e.to_string())?;
        let lhs: f64 = s.amplitudes.iter().map(|a| a * a).sum();
        let rhs = len as f64 * r.iter().map(|v| v * v).sum::<f64>();
        parseval = parseval.max((lhs - rhs).abs() / rhs);
    }
    Ok((
        peak_err < 1e-9 && leak < 1e-9 && parseval <= 1e-10,
        format!("peak |F_k| − N/2 {peak_err:.1e}, leakage {leak:.1e} (< 1e-9), Parseval rel {parseval:.1e} (≤ 1e-10)"),
    ))
}

// ---------------------------------------------------------------------------
// training runs through the experiment runner

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn experiment(file: &str, variants: &[&str], seeds: Vec<u64>, out: &Path) -> Result<Vec<RunSummary>, String> {
    let mut cfg = ExperimentConfig::load(&configs_dir().join(file)).map_err(|e| e.to_string())?;
    cfg.variants.retain(|v| variants.contains(&v.name.as_str()));
    if cfg.variants.len() != variants.len() {
        return Err(format!("{file}: missing variants among {variants:?}"));
    }
    cfg.train.seeds = seeds;
    let outcome = run_experiment(&cfg, &RunOptions { out_dir: Some(out.to_path_buf()), ..Default::default() })
        .map_err(|e| e.to_string())?;
    if let Some((v, s, e)) = outcome.failures.first() {
        return Err(format!("{v} seed {s}: {e}"));
    }
    Ok(outcome.summaries)
}

fn got(r: &Result<Vec<RunSummary>, String>) -> Result<&[RunSummary], String> {
    r.as_deref().map_err(|e| e.clone())
}

fn of<'a>(runs: &'a [RunSummary], variant: &str) -> Vec<&'a RunSummary> {
    let mut v: Vec<&RunSummary> = runs.iter().filter(|r| r.variant == variant).collect();
    v.sort_by_key(|r| r.seed);
    v
}

fn mean(v: impl Iterator<Item = Option<f64>>) -> f64 {
    let v: Vec<f64> = v.map(|x| x.unwrap_or(f64::NAN)).collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn regression_desk(tmp: &Path) -> Verdict {
    let runs = experiment("regression_desk.json", &["sin_x_b50pi", "tanh"], vec![0, 1, 2], tmp)?;
    let sin = mean(of(&runs, "sin_x_b50pi").iter().map(|r| r.eps_u));
    let tanh = mean(of(&runs, "tanh").iter().map(|r| r.eps_u));
    Ok((
        sin <= 1e-2 && tanh >= 10.0 * sin,
        format!("3 seeds × 20k epochs: mean eps_u sin b=50π {sin:.3e} (≤ 1e-2), tanh {tanh:.3e} (ratio {:.1} ≥ 10)", tanh / sin),
    ))
}

fn poisson_desk(runs: &[RunSummary]) -> Verdict {
    let b16: Vec<&RunSummary> = of(runs, "sin_x_b16pi_20k").into_iter().filter(|r| r.seed < 3).collect();
    let eps_f = mean(b16.iter().map(|r| r.eps_f));
    let eps_u_r = mean(b16.iter().map(|r| r.eps_u_r));
    let improved = b16.iter().all(|r| matches!((r.eps_u_r, r.eps_u), (Some(a), Some(b)) if a < b));
    let per_seed: Vec<String> =
        b16.iter().map(|r| format!("{:.2e}→{:.2e}", r.eps_u.unwrap_or(f64::NAN), r.eps_u_r.unwrap_or(f64::NAN))).collect();
    Ok((
        b16.len() == 3 && eps_f <= 5e-2 && eps_u_r <= 5e-2 && improved,
        format!(
            "b=16π, 20k + 10k epochs, 3 seeds: mean eps_f {eps_f:.3e}, mean eps_u_r {eps_u_r:.3e} (≤ 5e-2); eps_u→eps_u_r {}",
            per_seed.join(", ")
        ),
    ))
}

fn ordering(runs: &[RunSummary], plain: &[RunSummary]) -> Verdict {
    let scaled = of(runs, "sin_x_b16pi_20k");
    let plain = of(plain, "sin_x_20k");
    let mut wins = 0;
    let mut pairs = vec![];
    for p in &plain {
        let s = scaled.iter().find(|s| s.seed == p.seed).ok_or("missing scaled seed")?;
        let (a, b) = (s.eps_u_r.unwrap_or(f64::NAN), p.eps_u_r.unwrap_or(f64::NAN));
        wins += (a < b) as usize;
        pairs.push(format!("{a:.2e} vs {b:.2e}"));
    }
    Ok((wins >= 2, format!("eps_u_r b=16π vs unscaled: {} ({wins}/3 seeds better, need ≥ 2)", pairs.join(", "))))
}

fn residual_improvement(runs: &[RunSummary]) -> Verdict {
    let b16 = of(runs, "sin_x_b16pi_20k");
    let u = mean(b16.iter().map(|r| r.eps_u));
    let ur = mean(b16.iter().map(|r| r.eps_u_r));
    Ok((b16.len() == 6 && ur < u, format!("6 seeds: mean eps_u_r {ur:.3e} < mean eps_u {u:.3e}")))
}

fn poisson2d_extended(tmp: &Path) -> Verdict {
    let runs = experiment("poisson2d_n5_desk.json", &["sin_x_b32pi_20k"], vec![0, 1], tmp)?;
    let vals: Vec<f64> = runs.iter().map(|r| r.eps_u_r.unwrap_or(f64::NAN)).collect();
    Ok((vals.len() == 2 && vals.iter().all(|v| *v <= 5e-2), format!("n=5, b=32π, 2 seeds: eps_u_r {} (≤ 5e-2)", vals.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "))))
}

fn csvs(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut out = vec![];
    for e in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let p = e.map_err(|e| e.to_string())?.path();
        if p.extension().is_some_and(|x| x == "csv") {
            out.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).map_err(|e| e.to_string())?));
        }
    }
    out.sort();
    Ok(out)
}

fn determinism(tmp: &Path) -> Verdict {
    let mut files = 0;
    for (file, epochs) in [("regression_desk.json", 20), ("poisson1d_desk.json", 20), ("poisson2d_n5_desk.json", 2)] {
        let cfg = ExperimentConfig::load(&configs_dir().join(file)).map_err(|e| e.to_string())?;
        let mut dirs = vec![];
        for rep in 0..2 {
            let dir = tmp.join(format!("{}_{rep}", cfg.label));
            let opts = RunOptions { out_dir: Some(dir.clone()), epochs_override: Some(epochs), ..Default::default() };
            run_experiment(&cfg, &opts).map_err(|e| e.to_string())?;
            dirs.push(csvs(&dir)?);
        }
        if dirs[0].is_empty() || dirs[0] != dirs[1] {
            let diff = dirs[0].iter().zip(&dirs[1]).find(|(a, b)| a != b).map(|(a, _)| a.0.clone());
            return Ok((false, format!("{file}: CSV outputs differ ({diff:?})")));
        }
        files += dirs[0].len();
    }
    Ok((true, format!("{files} CSV files from the three desk configs identical across reruns")))
}

// ---------------------------------------------------------------------------

struct Suite {
    failed: usize,
}

impl Suite {
    fn check(&mut self, name: &str, f: impl FnOnce() -> Verdict) {
        let t = Instant::now();
        let (ok, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !ok {
            self.failed += 1;
        }
        println!("{} {name}: {detail} [{:.1}s]", if ok { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
}

fn main() {
    let extended = std::env::var("MFP_ACCEPTANCE_EXTENDED").is_ok_and(|v| v == "1");
    let tmp = tempfile::tempdir().expect("temp dir");
    let mut suite = Suite { failed: 0 };

    suite.check("derivative-oracles", derivative_oracles);
    suite.check("problem-consistency", problem_consistency);
    suite.check("scaling-exactness", scaling_exactness);
    suite.check("loss-normalization", loss_normalization);
    suite.check("dft-exactness", dft_exactness);
    suite.check("regression-desk", || regression_desk(&tmp.path().join("regression")));

    let seeds: Vec<u64> = if extended { (0..6).collect() } else { (0..3).collect() };
    let t = Instant::now();
    let scaled = experiment("poisson1d_desk.json", &["sin_x_b16pi_20k"], seeds, &tmp.path().join("p1_scaled"));
    let scaled_time = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let plain = experiment("poisson1d_desk.json", &["sin_x_20k"], vec![0, 1, 2], &tmp.path().join("p1_plain"));
    let plain_time = t.elapsed().as_secs_f64();
    eprintln!("poisson1d desk runs: {scaled_time:.0}s scaled, {plain_time:.0}s unscaled");
    suite.check("poisson1d-desk", || poisson_desk(got(&scaled)?));
    suite.check("scaling-ordering", || ordering(got(&scaled)?, got(&plain)?));

    if extended {
        suite.check("poisson2d-extended", || poisson2d_extended(&tmp.path().join("p2")));
        suite.check("residual-improvement", || residual_improvement(got(&scaled)?));
    } else {
        println!("SKIP poisson2d-extended: set MFP_ACCEPTANCE_EXTENDED=1 (hours of compute)");
        println!("SKIP residual-improvement: six-seed check, set MFP_ACCEPTANCE_EXTENDED=1");
    }
    suite.check("determinism", || determinism(&tmp.path().join("det")));

    if suite.failed > 0 {
        println!("{} criteria failed", suite.failed);
        std::process::exit(1);
    }
    println!("all criteria passed");
}

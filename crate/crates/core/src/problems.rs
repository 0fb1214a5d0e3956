//! Model problems and the domain-scaling transform.
//!
//! Every right-hand side is written in closed form rather than derived from
//! the exact solution, so the problems double as independent oracles for the
//! derivative code.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::autodiff::Activation;
use crate::error::{config_err, Result};
use crate::network::{MlpSpec, ParamSet};

/// A scalar field on `R^d`.
pub type Field = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// `sin(π·t)` with exact reduction of `t` modulo 2, so integer `t` gives 0.
pub fn sin_pi(t: f64) -> f64 {
    let r = t - 2.0 * (t / 2.0).round();
    let r = if r > 0.5 {
        1.0 - r
    } else if r < -0.5 {
        -1.0 - r
    } else {
        r
    };
    (PI * r).sin()
}

/// Axis-aligned box `[lo_0, hi_0] × … × [lo_{d-1}, hi_{d-1}]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return config_err("domain bounds must have equal, nonzero length");
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l < h)) {
            return config_err("domain needs lo < hi on every axis");
        }
        Ok(Self { lo, hi })
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo], hi: vec![hi] }
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        Self { lo: vec![lo, lo], hi: vec![hi, hi] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn scaled(&self, b: f64) -> Self {
        Self {
            lo: self.lo.iter().map(|v| v * b).collect(),
            hi: self.hi.iter().map(|v| v * b).collect(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| l <= v && v <= h)
    }

    pub fn on_boundary(&self, x: &[f64]) -> bool {
        self.contains(x) && x.iter().zip(self.lo.iter().zip(&self.hi)).any(|(v, (l, h))| v == l || v == h)
    }
}

/// `-Δu = f` in a box with Dirichlet data `u = g` on its boundary.
#[derive(Clone)]
pub struct PoissonProblem {
    pub name: String,
    pub domain: BoxDomain,
    pub f: Field,
    pub g: Field,
    pub exact_u: Option<Field>,
    /// 1 for a problem posed on its original domain.
    pub scale_b: f64,
}

impl fmt::Debug for PoissonProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PoissonProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("has_exact_u", &self.exact_u.is_some())
            .field("scale_b", &self.scale_b)
            .finish()
    }
}

impl PoissonProblem {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn rhs(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn boundary(&self, x: &[f64]) -> f64 {
        (self.g)(x)
    }

    pub fn exact(&self, x: &[f64]) -> Option<f64> {
        self.exact_u.as_ref().map(|u| u(x))
    }
}

/// A function to fit by least squares on an interval.
#[derive(Clone)]
pub struct RegressionTarget {
    pub u: Field,
    pub domain: BoxDomain,
    pub scale_b: f64,
}

impl fmt::Debug for RegressionTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RegressionTarget")
            .field("domain", &self.domain)
            .field("scale_b", &self.scale_b)
            .finish()
    }
}

impl RegressionTarget {
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.u)(x)
    }
}

/// `u(x) = ½ sin(2πx) + ½ sin(50πx)` on `[-1, 1]`.
pub fn make_regression_target() -> RegressionTarget {
    RegressionTarget {
        u: Arc::new(|x: &[f64]| 0.5 * sin_pi(2.0 * x[0]) + 0.5 * sin_pi(50.0 * x[0])),
        domain: BoxDomain::interval(-1.0, 1.0),
        scale_b: 1.0,
    }
}

/// `(amplitude, k)` of the terms `a·sin(kπx)` in the 1D solution.
pub const POISSON_1D_TERMS: [(f64, f64); 5] = [(5.0, 1.0), (1.0, 8.0), (0.5, 16.0), (0.25, 32.0), (0.125, 64.0)];

/// Five-frequency solution on `(-1, 1)`, `u = Σ a_k sin(kπx)`.
pub fn make_poisson_1d() -> PoissonProblem {
    let u: Field = Arc::new(|x: &[f64]| POISSON_1D_TERMS.iter().map(|&(a, k)| a * sin_pi(k * x[0])).sum());
    let f: Field = Arc::new(|x: &[f64]| {
        POISSON_1D_TERMS
            .iter()
            .map(|&(a, k)| a * (k * PI) * (k * PI) * sin_pi(k * x[0]))
            .sum()
    });
    PoissonProblem {
        name: "poisson1d".into(),
        domain: BoxDomain::interval(-1.0, 1.0),
        f,
        g: u.clone(),
        exact_u: Some(u),
        scale_b: 1.0,
    }
}

/// `u(x, y) = Σ_{i=1}^{n} (1/i) sin(2^i πx) sin(2^i πy)` on `(0, 1)²`.
pub fn make_poisson_2d(n: usize) -> Result<PoissonProblem> {
    if n < 1 {
        return config_err("poisson2d needs n >= 1");
    }
    let u: Field = Arc::new(move |x: &[f64]| {
        (1..=n)
            .map(|i| {
                let k = (1u64 << i) as f64;
                sin_pi(k * x[0]) * sin_pi(k * x[1]) / i as f64
            })
            .sum()
    });
    let f: Field = Arc::new(move |x: &[f64]| {
        (1..=n)
            .map(|i| {
                let k = (1u64 << i) as f64;
                let w = k * PI;
                2.0 / i as f64 * w * w * sin_pi(k * x[0]) * sin_pi(k * x[1])
            })
            .sum()
    });
    Ok(PoissonProblem {
        name: format!("poisson2d_n{n}"),
        domain: BoxDomain::square(0.0, 1.0),
        f,
        g: Arc::new(|_: &[f64]| 0.0),
        exact_u: Some(u),
        scale_b: 1.0,
    })
}

fn check_scale(current: f64, b: f64) -> Result<()> {
    if current != 1.0 {
        return config_err(format!("problem is already scaled by {current}"));
    }
    if !(b.is_finite() && b >= 1.0) {
        return config_err(format!("scaling factor must be >= 1, got {b}"));
    }
    Ok(())
}

// x ↦ field(x / b) / div
fn compose_scaled(field: Field, b: f64, div: f64) -> Field {
    Arc::new(move |xh: &[f64]| {
        let mut buf = [0.0; 4];
        let x = &mut buf[..xh.len()];
        for (o, v) in x.iter_mut().zip(xh) {
            *o = v / b;
        }
        field(x) / div
    })
}

/// The problem posed on `Ω_b = bΩ`: `f̂(x̂) = f(x̂/b)/b²`, `ĝ(x̂) = g(x̂/b)`.
///
/// `b = 1` is accepted and returns a problem whose fields agree pointwise
/// with the input.
pub fn scale_problem(p: &PoissonProblem, b: f64) -> Result<PoissonProblem> {
    check_scale(p.scale_b, b)?;
    Ok(PoissonProblem {
        name: p.name.clone(),
        domain: p.domain.scaled(b),
        f: compose_scaled(p.f.clone(), b, b * b),
        g: compose_scaled(p.g.clone(), b, 1.0),
        exact_u: p.exact_u.clone().map(|u| compose_scaled(u, b, 1.0)),
        scale_b: b,
    })
}

/// `û(x̂) = u(x̂/b)` on the scaled interval.
pub fn scale_target(t: &RegressionTarget, b: f64) -> Result<RegressionTarget> {
    check_scale(t.scale_b, b)?;
    Ok(RegressionTarget {
        u: compose_scaled(t.u.clone(), b, 1.0),
        domain: t.domain.scaled(b),
        scale_b: b,
    })
}

/// Parameters `θ_s` with `N(x; θ_s) = N̂(bx; θ̂)`.
///
/// The first layer is linear in its inputs, so multiplying its weights by
/// `b` absorbs the change of variables exactly.
pub fn scale_back_materialize(spec: &MlpSpec, params_hat: &ParamSet, b: f64) -> ParamSet {
    let mut out = params_hat.clone();
    let first = spec.layers()[0];
    for w in &mut out.0[first.weight_offset..first.bias_offset] {
        *w *= b;
    }
    out
}

/// Problem selection as it appears in run configurations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum ProblemSpec {
    Regression,
    Poisson1d,
    Poisson2d { n: usize },
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        match self {
            ProblemSpec::Regression | ProblemSpec::Poisson1d => 1,
            ProblemSpec::Poisson2d { .. } => 2,
        }
    }

    pub fn label(&self) -> String {
        match self {
            ProblemSpec::Regression => "regression".into(),
            ProblemSpec::Poisson1d => "poisson1d".into(),
            ProblemSpec::Poisson2d { n } => format!("poisson2d_n{n}"),
        }
    }

    pub fn build(&self) -> Result<Problem> {
        Ok(match self {
            ProblemSpec::Regression => Problem::Regression(make_regression_target()),
            ProblemSpec::Poisson1d => Problem::Poisson(make_poisson_1d()),
            ProblemSpec::Poisson2d { n } => Problem::Poisson(make_poisson_2d(*n)?),
        })
    }
}

/// Either kind of model problem.
#[derive(Debug, Clone)]
pub enum Problem {
    Regression(RegressionTarget),
    Poisson(PoissonProblem),
}

impl Problem {
    pub fn domain(&self) -> &BoxDomain {
        match self {
            Problem::Regression(t) => &t.domain,
            Problem::Poisson(p) => &p.domain,
        }
    }

    pub fn dim(&self) -> usize {
        self.domain().dim()
    }

    pub fn exact(&self, x: &[f64]) -> Option<f64> {
        match self {
            Problem::Regression(t) => Some(t.eval(x)),
            Problem::Poisson(p) => p.exact(x),
        }
    }

    pub fn scale_b(&self) -> f64 {
        match self {
            Problem::Regression(t) => t.scale_b,
            Problem::Poisson(p) => p.scale_b,
        }
    }

    pub fn scaled(&self, b: f64) -> Result<Problem> {
        Ok(match self {
            Problem::Regression(t) => Problem::Regression(scale_target(t, b)?),
            Problem::Poisson(p) => Problem::Poisson(scale_problem(p, b)?),
        })
    }

    pub fn as_poisson(&self) -> Option<&PoissonProblem> {
        match self {
            Problem::Poisson(p) => Some(p),
            Problem::Regression(_) => None,
        }
    }
}

/// A one-hidden-layer `sin` network that reproduces the exact solution of a
/// built-in problem.
///
/// Products `sin(kx)·sin(ky)` are expanded as
/// `½[sin(kx − ky + π/2) − sin(kx + ky + π/2)]`.
pub fn exact_network(problem: &ProblemSpec) -> (MlpSpec, ParamSet) {
    // (input weights, bias, readout weight) per hidden unit
    let units: Vec<(Vec<f64>, f64, f64)> = match problem {
        ProblemSpec::Regression => vec![(vec![2.0 * PI], 0.0, 0.5), (vec![50.0 * PI], 0.0, 0.5)],
        ProblemSpec::Poisson1d => POISSON_1D_TERMS.iter().map(|&(a, k)| (vec![k * PI], 0.0, a)).collect(),
        ProblemSpec::Poisson2d { n } => (1..=*n)
            .flat_map(|i| {
                let w = (1u64 << i) as f64 * PI;
                let c = 0.5 / i as f64;
                [(vec![w, -w], PI / 2.0, c), (vec![w, w], PI / 2.0, -c)]
            })
            .collect(),
    };
    let spec = MlpSpec::new(problem.dim(), 1, units.len(), Activation::sin(1.0));
    let mut params = Vec::with_capacity(spec.param_count());
    for (w, _, _) in &units {
        params.extend_from_slice(w);
    }
    params.extend(units.iter().map(|u| u.1));
    params.extend(units.iter().map(|u| u.2));
    params.push(0.0);
    (spec, ParamSet(params))
}

//! Training and test point sets.
//!
//! Random draws use ChaCha8 seeded with `seed_from_u64(seed)`, with a fixed
//! stream id per purpose (interior, boundary, initialization), so a seed
//! reproduces the same points on any platform.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::format::fmt_f64;
use crate::network::{seeded_rng, streams};
use crate::problems::BoxDomain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Interior,
    Boundary,
}

/// Points stored as a flat row-major `n × dim` buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub dim: usize,
    pub coords: Vec<f64>,
    pub kind: PointKind,
    /// `None` for deterministic grids.
    pub seed: Option<u64>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    /// The same points mapped by `x ↦ b·x`.
    pub fn scaled(&self, b: f64) -> PointSet {
        PointSet {
            coords: self.coords.iter().map(|v| v * b).collect(),
            ..self.clone()
        }
    }

    /// Evaluates a field at every point.
    pub fn map(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        self.iter().map(f).collect()
    }

    /// One point per row, header `x` or `x,y`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let header = ["x", "y", "z", "w"][..self.dim].join(",");
        writeln!(w, "{header}")?;
        for p in self.iter() {
            let row: Vec<String> = p.iter().map(|&v| fmt_f64(v)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn linspace(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    match m {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => {
            let mut v: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
            v[m - 1] = hi;
            v
        }
    }
}

/// Equispaced points including both endpoints of every axis.
///
/// In 2D `count` must be a perfect square; points are ordered with `x`
/// varying fastest.
pub fn uniform_grid(domain: &BoxDomain, count: usize) -> Result<PointSet> {
    if count == 0 {
        return config_err("grid needs at least one point");
    }
    let coords = match domain.dim() {
        1 => linspace(domain.lo[0], domain.hi[0], count),
        2 => {
            let m = (count as f64).sqrt().round() as usize;
            if m * m != count {
                return config_err(format!("2D grid size {count} is not a perfect square"));
            }
            let xs = linspace(domain.lo[0], domain.hi[0], m);
            let ys = linspace(domain.lo[1], domain.hi[1], m);
            let mut c = Vec::with_capacity(2 * count);
            for &y in &ys {
                for &x in &xs {
                    c.push(x);
                    c.push(y);
                }
            }
            c
        }
        d => return config_err(format!("unsupported dimension {d}")),
    };
    Ok(PointSet { dim: domain.dim(), coords, kind: PointKind::Interior, seed: None })
}

/// `count` equispaced points on `[lo, hi)`, right endpoint excluded.
pub fn periodic_grid(lo: f64, hi: f64, count: usize) -> PointSet {
    let coords = (0..count).map(|j| lo + (hi - lo) * j as f64 / count as f64).collect();
    PointSet { dim: 1, coords, kind: PointKind::Interior, seed: None }
}

/// Latin hypercube sample: along every axis exactly one point falls in each
/// of `count` equal strata.
pub fn latin_hypercube(domain: &BoxDomain, count: usize, seed: u64) -> Result<PointSet> {
    if count == 0 {
        return config_err("latin hypercube needs count >= 1");
    }
    let d = domain.dim();
    let mut rng = seeded_rng(seed, streams::INTERIOR);
    let mut coords = vec![0.0; count * d];
    for axis in 0..d {
        let (lo, hi) = (domain.lo[axis], domain.hi[axis]);
        let mut vals: Vec<f64> = (0..count)
            .map(|k| {
                let u: f64 = rng.random();
                lo + (hi - lo) * (k as f64 + u) / count as f64
            })
            .collect();
        vals.shuffle(&mut rng);
        for (i, v) in vals.into_iter().enumerate() {
            coords[i * d + axis] = v;
        }
    }
    Ok(PointSet { dim: d, coords, kind: PointKind::Interior, seed: Some(seed) })
}

/// How boundary points are placed along each edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryMode {
    Uniform,
    Random(u64),
}

/// Points on `∂Ω`.
///
/// In 1D the boundary is the two endpoints and `count` must be 2. In 2D
/// `count` is split evenly over the four edges, walked counter-clockwise
/// from `(lo, lo)`; uniform placement puts each corner in exactly once.
pub fn boundary_sample(domain: &BoxDomain, count: usize, mode: BoundaryMode) -> Result<PointSet> {
    let seed = match mode {
        BoundaryMode::Uniform => None,
        BoundaryMode::Random(s) => Some(s),
    };
    let coords = match domain.dim() {
        1 => {
            if count != 2 {
                return config_err(format!("a 1D boundary has exactly 2 points, requested {count}"));
            }
            vec![domain.lo[0], domain.hi[0]]
        }
        2 => {
            if count == 0 || count % 4 != 0 {
                return config_err(format!("2D boundary count must be a positive multiple of 4, got {count}"));
            }
            let per_edge = count / 4;
            let mut rng = seed.map(|s| seeded_rng(s, streams::BOUNDARY));
            let mut t = |k: usize| match rng.as_mut() {
                Some(r) => r.random::<f64>(),
                None => k as f64 / per_edge as f64,
            };
            let (x0, y0, x1, y1) = (domain.lo[0], domain.lo[1], domain.hi[0], domain.hi[1]);
            let (lx, ly) = (x1 - x0, y1 - y0);
            let mut c = Vec::with_capacity(2 * count);
            for k in 0..per_edge {
                c.extend([x0 + t(k) * lx, y0]);
            }
            for k in 0..per_edge {
                c.extend([x1, y0 + t(k) * ly]);
            }
            for k in 0..per_edge {
                c.extend([x1 - t(k) * lx, y1]);
            }
            for k in 0..per_edge {
                c.extend([x0, y1 - t(k) * ly]);
            }
            c
        }
        d => return config_err(format!("unsupported dimension {d}")),
    };
    Ok(PointSet { dim: domain.dim(), coords, kind: PointKind::Boundary, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grids() {
        let g = uniform_grid(&BoxDomain::interval(-1.0, 1.0), 5).unwrap();
        assert_eq!(g.coords, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let sq = uniform_grid(&BoxDomain::square(0.0, 1.0), 4).unwrap();
        assert_eq!(sq.coords, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        assert!(uniform_grid(&BoxDomain::square(0.0, 1.0), 5).is_err());

        let big = uniform_grid(&BoxDomain::interval(-1.0, 1.0), 100_000).unwrap();
        assert_eq!(big.len(), 100_000);
        assert_eq!(big.coords[0], -1.0);
        assert_eq!(big.coords[99_999], 1.0);
        let h = 2.0 / 99_999.0;
        assert!(big.coords.windows(2).all(|w| ((w[1] - w[0]) - h).abs() < 1e-12));
    }

    #[test]
    fn latin_hypercube_strata() {
        let s = latin_hypercube(&BoxDomain::interval(0.0, 1.0), 4, 42).unwrap();
        let mut v = s.coords.clone();
        v.sort_by(f64::total_cmp);
        for (k, x) in v.iter().enumerate() {
            assert!(*x >= k as f64 * 0.25 && *x <= (k + 1) as f64 * 0.25, "{v:?}");
        }
        assert_eq!(s, latin_hypercube(&BoxDomain::interval(0.0, 1.0), 4, 42).unwrap());
        assert_ne!(s, latin_hypercube(&BoxDomain::interval(0.0, 1.0), 4, 43).unwrap());
    }

    #[test]
    fn latin_hypercube_mean() {
        let s = latin_hypercube(&BoxDomain::interval(-1.0, 1.0), 1000, 0).unwrap();
        let mean = s.coords.iter().sum::<f64>() / 1000.0;
        assert!(mean.abs() < 0.05, "{mean}");
    }

    #[test]
    fn boundary_points() {
        let b1 = boundary_sample(&BoxDomain::interval(-1.0, 1.0), 2, BoundaryMode::Uniform).unwrap();
        assert_eq!(b1.coords, vec![-1.0, 1.0]);
        assert!(boundary_sample(&BoxDomain::interval(-1.0, 1.0), 3, BoundaryMode::Uniform).is_err());

        let sq = BoxDomain::square(0.0, 1.0);
        let b8 = boundary_sample(&sq, 8, BoundaryMode::Uniform).unwrap();
        let on = |p: &[f64], axis: usize, v: f64| p[axis] == v;
        let edges = [
            b8.iter().filter(|p| on(p, 1, 0.0) && p[0] < 1.0).count(),
            b8.iter().filter(|p| on(p, 0, 1.0) && p[1] < 1.0).count(),
            b8.iter().filter(|p| on(p, 1, 1.0) && p[0] > 0.0).count(),
            b8.iter().filter(|p| on(p, 0, 0.0) && p[1] > 0.0).count(),
        ];
        assert_eq!(edges, [2, 2, 2, 2]);

        let b4000 = boundary_sample(&sq, 4000, BoundaryMode::Random(3)).unwrap();
        assert_eq!(b4000.len(), 4000);
        assert!(b4000.iter().all(|p| sq.on_boundary(p)));
        assert!(boundary_sample(&sq, 6, BoundaryMode::Uniform).is_err());
    }

    #[test]
    fn csv_export() {
        let g = uniform_grid(&BoxDomain::square(0.0, 1.0), 4).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x,y\n0,0\n1,0\n0,1\n1,1\n");
    }

    proptest! {
        #[test]
        fn lhs_points_stay_inside(count in 1usize..200, seed in any::<u64>()) {
            let dom = BoxDomain::square(-0.5, 2.0);
            let s = latin_hypercube(&dom, count, seed).unwrap();
            prop_assert_eq!(s.len(), count);
            prop_assert!(s.iter().all(|p| dom.contains(p)));
        }

        #[test]
        fn scaling_commutes_with_grids(count in 2usize..300, b in 1.0f64..200.0) {
            let dom = BoxDomain::interval(-1.0, 1.0);
            let mapped = uniform_grid(&dom, count).unwrap().scaled(b);
            let direct = uniform_grid(&dom.scaled(b), count).unwrap();
            for (x, y) in mapped.coords.iter().zip(&direct.coords) {
                prop_assert!((x - y).abs() <= 1e-12 * b);
            }
        }
    }
}

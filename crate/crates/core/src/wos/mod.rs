//! Walk-on-spheres estimator for Δu = f with Dirichlet data.

mod problem;

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{BoundaryMesh, GeometryError, Rng, Vec3};

pub use problem::{
    DirichletBC, Gaussian, PoissonProblem, ProblemRanges, ProblemSpec, ScalarFn, SourceSphere, SourceTerm,
};

#[derive(Debug, thiserror::Error)]
pub enum WosError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("sample file row {row}: {msg}")]
    BadRow { row: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WosConfig {
    pub shell_eps: f64,
    pub max_steps: usize,
    pub m: usize,
}

impl WosConfig {
    /// Shell of 1e-3 of the bounding diagonal, 1000 steps.
    pub fn for_mesh(mesh: &BoundaryMesh, m: usize) -> Self {
        Self { shell_eps: 1e-3 * mesh.diagonal(), max_steps: 1000, m }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Walk {
    pub value: f64,
    pub steps: usize,
    pub truncated: bool,
}

/// Radius fraction t = r/R distributed with the normalized ball Green's
/// function density, CDF 3t² − 2t³.
fn green_radius_fraction(u: f64) -> f64 {
    0.5 - ((1.0 - 2.0 * u).asin() / 3.0).sin()
}

pub fn walk(prob: &PoissonProblem, x: &Vec3, cfg: &WosConfig, rng: &mut Rng) -> Walk {
    let mesh = &*prob.mesh;
    let with_source = !prob.f.is_zero();
    let mut pos = *x;
    let mut acc = 0.0;
    for steps in 0..cfg.max_steps {
        let cp = mesh.closest_point(&pos);
        if cp.distance < cfg.shell_eps {
            return Walk { value: acc + prob.g.eval(&cp.point), steps, truncated: false };
        }
        let r = cp.distance;
        if with_source {
            // ∫_B G_R(x, y) f(y) dy with ∫_B G_R = R²/6, one sample from the
            // normalized Green density.
            let t = green_radius_fraction(rng.uniform());
            let y = pos + rng.unit_vector() * (t * r);
            acc -= r * r / 6.0 * prob.f.eval(&y);
        }
        pos += rng.unit_vector() * r;
    }
    Walk { value: acc + prob.boundary_value(&pos), steps: cfg.max_steps, truncated: true }
}

/// One sample of u(x).
pub fn wos_single_walk(prob: &PoissonProblem, x: &Vec3, cfg: &WosConfig, rng: &mut Rng) -> f64 {
    walk(prob, x, cfg, rng).value
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Sample variance of the individual walks (not of the mean).
    pub variance: f64,
    pub walks: usize,
    pub truncated: usize,
}

impl Estimate {
    pub fn std_error(&self) -> f64 {
        (self.variance / self.walks as f64).sqrt()
    }
}

pub fn estimate_full(prob: &PoissonProblem, x: &Vec3, cfg: &WosConfig, rng: &mut Rng) -> Estimate {
    let m = cfg.m.max(1);
    // Welford.
    let (mut mean, mut m2, mut truncated) = (0.0, 0.0, 0);
    for k in 0..m {
        let w = walk(prob, x, cfg, rng);
        truncated += w.truncated as usize;
        let d = w.value - mean;
        mean += d / (k + 1) as f64;
        m2 += d * (w.value - mean);
    }
    let variance = if m > 1 { (m2 / (m - 1) as f64).max(0.0) } else { 0.0 };
    Estimate { mean, variance, walks: m, truncated }
}

/// Mean and sample variance of `cfg.m` walks from `x`.
pub fn estimate(prob: &PoissonProblem, x: &Vec3, cfg: &WosConfig, rng: &mut Rng) -> (f64, f64) {
    let e = estimate_full(prob, x, cfg, rng);
    (e.mean, e.variance)
}

/// Sparse Monte Carlo samples of the solution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    pub points: Vec<Vec3>,
    pub values: Vec<f64>,
    pub variances: Vec<f64>,
    pub walks: Vec<usize>,
    pub truncated: usize,
}

#[derive(Serialize, Deserialize)]
struct SampleRow {
    x: f64,
    y: f64,
    z: f64,
    u: f64,
    variance: f64,
    m: usize,
}

impl SampleSet {
    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), WosError> {
        let mut w = csv::Writer::from_writer(out);
        for i in 0..self.n() {
            let p = self.points[i];
            w.serialize(SampleRow {
                x: p.x,
                y: p.y,
                z: p.z,
                u: self.values[i],
                variance: self.variances[i],
                m: self.walks[i],
            })?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv(input: impl Read) -> Result<Self, WosError> {
        let mut set = SampleSet::default();
        for (row, rec) in csv::Reader::from_reader(input).deserialize::<SampleRow>().enumerate() {
            let r = rec?;
            if !r.u.is_finite() || r.variance < 0.0 {
                return Err(WosError::BadRow { row: row + 1, msg: "non-finite value or negative variance".into() });
            }
            set.points.push(Vec3::new(r.x, r.y, r.z));
            set.values.push(r.u);
            set.variances.push(r.variance);
            set.walks.push(r.m);
        }
        Ok(set)
    }
}

/// Estimates at given points; point i uses substream i + 1 of `rng`.
pub fn estimate_points(prob: &PoissonProblem, points: &[Vec3], cfg: &WosConfig, rng: &Rng) -> SampleSet {
    let est: Vec<Estimate> = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| estimate_full(prob, x, cfg, &mut rng.substream(1 + i as u64)))
        .collect();
    SampleSet {
        points: points.to_vec(),
        values: est.iter().map(|e| e.mean).collect(),
        variances: est.iter().map(|e| e.variance).collect(),
        walks: est.iter().map(|e| e.walks).collect(),
        truncated: est.iter().map(|e| e.truncated).sum(),
    }
}

/// Samples n interior points (substream 0) and estimates u at each.
pub fn solve_sparse(prob: &PoissonProblem, n: usize, cfg: &WosConfig, rng: &Rng) -> Result<SampleSet, WosError> {
    let points = prob.mesh.sample_interior(n, &mut rng.substream(0))?;
    Ok(estimate_points(prob, &points, cfg, rng))
}

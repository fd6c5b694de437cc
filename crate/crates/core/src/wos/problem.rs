use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundaryMesh, GeometryError, Rng, Vec3};

pub type ScalarFn = Arc<dyn Fn(&Vec3) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub center: Vec3,
    pub amplitude: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceSphere {
    pub center: Vec3,
    pub radius: f64,
    pub amplitude: f64,
}

/// Dirichlet data g on the boundary.
#[derive(Clone)]
pub enum DirichletBC {
    Gaussians(Vec<Gaussian>),
    Function(ScalarFn),
}

/// Right-hand side f of Δu = f.
#[derive(Clone)]
pub enum SourceTerm {
    Spheres(Vec<SourceSphere>),
    Function(ScalarFn),
}

impl DirichletBC {
    pub fn constant(c: f64) -> Self {
        DirichletBC::Function(Arc::new(move |_| c))
    }

    pub fn from_fn(f: impl Fn(&Vec3) -> f64 + Send + Sync + 'static) -> Self {
        DirichletBC::Function(Arc::new(f))
    }

    pub fn eval(&self, p: &Vec3) -> f64 {
        match self {
            DirichletBC::Gaussians(gs) => gs
                .iter()
                .map(|g| g.amplitude * (-(p - g.center).norm_squared() / (2.0 * g.width * g.width)).exp())
                .sum(),
            DirichletBC::Function(f) => f(p),
        }
    }
}

impl SourceTerm {
    pub fn zero() -> Self {
        SourceTerm::Spheres(Vec::new())
    }

    pub fn constant(c: f64) -> Self {
        SourceTerm::Function(Arc::new(move |_| c))
    }

    pub fn from_fn(f: impl Fn(&Vec3) -> f64 + Send + Sync + 'static) -> Self {
        SourceTerm::Function(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SourceTerm::Spheres(s) if s.is_empty())
    }

    pub fn eval(&self, y: &Vec3) -> f64 {
        match self {
            SourceTerm::Spheres(ss) => ss
                .iter()
                .filter(|s| (y - s.center).norm_squared() <= s.radius * s.radius)
                .map(|s| s.amplitude)
                .sum(),
            SourceTerm::Function(f) => f(y),
        }
    }
}

impl fmt::Debug for DirichletBC {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DirichletBC::Gaussians(g) => f.debug_tuple("Gaussians").field(&g.len()).finish(),
            DirichletBC::Function(_) => f.write_str("Function"),
        }
    }
}

impl fmt::Debug for SourceTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceTerm::Spheres(s) => f.debug_tuple("Spheres").field(&s.len()).finish(),
            SourceTerm::Function(_) => f.write_str("Function"),
        }
    }
}

/// Δu = f in Ω, u = g on ∂Ω.
#[derive(Debug, Clone)]
pub struct PoissonProblem {
    pub mesh: Arc<BoundaryMesh>,
    pub g: DirichletBC,
    pub f: SourceTerm,
}

impl PoissonProblem {
    pub fn new(mesh: Arc<BoundaryMesh>, g: DirichletBC, f: SourceTerm) -> Self {
        Self { mesh, g, f }
    }

    /// Dirichlet value attached to an arbitrary point: g at its boundary projection.
    pub fn boundary_value(&self, x: &Vec3) -> f64 {
        self.g.eval(&self.mesh.project_to_boundary(x))
    }
}

/// Ranges used to draw random problems. Lengths are fractions of the bounding
/// box diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProblemRanges {
    pub gaussians: (usize, usize),
    pub gaussian_amplitude: (f64, f64),
    pub gaussian_width: (f64, f64),
    pub spheres: (usize, usize),
    pub sphere_radius: (f64, f64),
    pub sphere_amplitude: (f64, f64),
}

impl Default for ProblemRanges {
    fn default() -> Self {
        Self {
            gaussians: (40, 50),
            gaussian_amplitude: (-1.0, 1.0),
            gaussian_width: (0.05, 0.15),
            spheres: (20, 30),
            sphere_radius: (0.03, 0.1),
            sphere_amplitude: (-20.0, 20.0),
        }
    }
}

/// Stored parameters of a randomly drawn problem; enough to rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub gaussians: Vec<Gaussian>,
    pub spheres: Vec<SourceSphere>,
}

impl ProblemSpec {
    /// Gaussian centres are drawn in the bounding box and projected onto ∂Ω;
    /// sphere centres are drawn inside Ω.
    pub fn random(mesh: &BoundaryMesh, ranges: &ProblemRanges, rng: &mut Rng) -> Result<Self, GeometryError> {
        let bb = mesh.bbox();
        let diag = bb.diagonal();
        let ng = rng.range_inclusive(ranges.gaussians.0, ranges.gaussians.1);
        let mut gaussians = Vec::with_capacity(ng);
        for _ in 0..ng {
            let p = Vec3::new(
                rng.range(bb.min.x, bb.max.x),
                rng.range(bb.min.y, bb.max.y),
                rng.range(bb.min.z, bb.max.z),
            );
            gaussians.push(Gaussian {
                center: mesh.project_to_boundary(&p),
                amplitude: rng.range(ranges.gaussian_amplitude.0, ranges.gaussian_amplitude.1),
                width: diag * rng.range(ranges.gaussian_width.0, ranges.gaussian_width.1),
            });
        }
        let ns = rng.range_inclusive(ranges.spheres.0, ranges.spheres.1);
        let centers = mesh.sample_interior(ns, rng)?;
        let spheres = centers
            .into_iter()
            .map(|center| SourceSphere {
                center,
                radius: diag * rng.range(ranges.sphere_radius.0, ranges.sphere_radius.1),
                amplitude: rng.range(ranges.sphere_amplitude.0, ranges.sphere_amplitude.1),
            })
            .collect();
        Ok(Self { gaussians, spheres })
    }

    pub fn problem(&self, mesh: Arc<BoundaryMesh>) -> PoissonProblem {
        PoissonProblem::new(
            mesh,
            DirichletBC::Gaussians(self.gaussians.clone()),
            SourceTerm::Spheres(self.spheres.clone()),
        )
    }
}

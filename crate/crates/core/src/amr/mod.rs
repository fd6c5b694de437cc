//! Adaptive refinement driven by a gradient-recovery (ZZ) error indicator.

mod refine;

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::fem::{self, FemError, Solution, TetMesh};
use crate::geometry::Vec3;
use crate::wos::PoissonProblem;

pub use refine::{refine, refine_with_report, RefineReport};

#[derive(Debug, thiserror::Error)]
pub enum AmrError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("minimum dihedral angle {degrees:.3}° after refinement")]
    QualityCollapse { degrees: f64 },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AmrConfig {
    /// Tets with error ≥ threshold · max error are refined.
    pub threshold: f64,
    pub vertex_budget: usize,
    pub max_iterations: usize,
}

impl Default for AmrConfig {
    fn default() -> Self {
        Self { threshold: 0.7, vertex_budget: 10_000, max_iterations: 500 }
    }
}

/// Per-vertex gradient recovered by volume-weighted averaging of the
/// incident element gradients.
pub fn recovered_gradients(sol: &Solution) -> Vec<Vec3> {
    let mesh = &sol.mesh;
    let mut acc = vec![Vec3::zeros(); mesh.num_vertices()];
    let mut w = vec![0.0; mesh.num_vertices()];
    for t in 0..mesh.num_tets() {
        let g = sol.tet_gradient(t);
        let v = mesh.volumes()[t];
        for &c in &mesh.tets()[t] {
            acc[c] += g * v;
            w[c] += v;
        }
    }
    acc.iter().zip(&w).map(|(a, w)| a / *w).collect()
}

/// η_t = sqrt(v_t) · ‖mean of recovered corner gradients − element gradient‖.
pub fn zz_error(mesh: &TetMesh, sol: &Solution) -> Vec<f64> {
    debug_assert_eq!(mesh.num_vertices(), sol.values.len());
    let rec = recovered_gradients(sol);
    (0..mesh.num_tets())
        .map(|t| {
            let tet = mesh.tets()[t];
            let mean = (rec[tet[0]] + rec[tet[1]] + rec[tet[2]] + rec[tet[3]]) / 4.0;
            mesh.volumes()[t].sqrt() * (mean - sol.tet_gradient(t)).norm()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmrIteration {
    pub iteration: usize,
    pub vertices: usize,
    pub tets: usize,
    pub max_error: f64,
    pub mean_error: f64,
    pub marked: usize,
    pub cg_iterations: usize,
    /// L2 relative error at the vertices when an exact solution is supplied.
    pub relative_error: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct AmrOutcome {
    pub mesh: Arc<TetMesh>,
    pub solution: Solution,
    pub telemetry: Vec<AmrIteration>,
    pub quality_warnings: usize,
    /// FEM solves performed.
    pub solves: usize,
}

/// Solve, estimate and refine until the vertex budget or the iteration cap
/// is reached. The returned solution lives on the returned mesh.
pub fn amr_loop(prob: &PoissonProblem, coarse: Arc<TetMesh>, cfg: &AmrConfig) -> Result<AmrOutcome, AmrError> {
    amr_loop_with_oracle(prob, coarse, cfg, None)
}

pub fn amr_loop_with_oracle(
    prob: &PoissonProblem,
    coarse: Arc<TetMesh>,
    cfg: &AmrConfig,
    exact: Option<&(dyn Fn(&Vec3) -> f64 + Sync)>,
) -> Result<AmrOutcome, AmrError> {
    let mut mesh = coarse;
    let mut telemetry = Vec::new();
    let mut quality_warnings = 0;
    let mut solves = 0;
    for iteration in 0.. {
        let sol = fem::solve_problem(mesh.clone(), prob)?;
        solves += 1;
        let eta = zz_error(&mesh, &sol);
        let max_error = eta.iter().cloned().fold(0.0, f64::max);
        let mean_error = eta.iter().sum::<f64>() / eta.len() as f64;
        let relative_error = match exact {
            Some(u) => {
                let r: Vec<f64> = mesh.vertices().iter().map(u).collect();
                fem::relative_error_values(&sol.values, &r, fem::Norm::L2).ok()
            }
            None => None,
        };
        let done = mesh.num_vertices() >= cfg.vertex_budget || iteration >= cfg.max_iterations || max_error == 0.0;
        let marked = if done { 0 } else { eta.iter().filter(|&&e| e >= cfg.threshold * max_error).count() };
        telemetry.push(AmrIteration {
            iteration,
            vertices: mesh.num_vertices(),
            tets: mesh.num_tets(),
            max_error,
            mean_error,
            marked,
            cg_iterations: sol.stats.iterations,
            relative_error,
        });
        if done {
            return Ok(AmrOutcome { mesh, solution: sol, telemetry, quality_warnings, solves });
        }
        let (next, report) = refine_with_report(&mesh, &eta, cfg.threshold)?;
        if report.quality_collapse {
            quality_warnings += 1;
        }
        mesh = Arc::new(next);
    }
    unreachable!()
}

pub fn write_telemetry(rows: &[AmrIteration], out: impl Write) -> Result<(), AmrError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

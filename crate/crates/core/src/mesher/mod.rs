//! Octree mesher: a graded body-centred lattice clipped to the domain with
//! its boundary snapped onto the input surface.
//!
//! Cell edge H and target size s are related by H = √2·s, which makes the
//! volume-equivalent regular edge of the lattice tets equal to s.

mod carve;
mod octree;
mod tetra;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fem::TetMesh;
use crate::geometry::BoundaryMesh;
use crate::sizing::{self, SizingField};

use octree::Octree;

#[derive(Debug, thiserror::Error)]
pub enum MesherError {
    #[error("invalid mesher configuration: {0}")]
    InvalidConfig(String),
    #[error("requested size {size:.3e} is below the limit {limit:.3e}")]
    FieldTooFine { size: f64, limit: f64 },
    #[error("meshing failed near {region}")]
    MeshingFailed { region: String },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshMode {
    Uniform { size: f64 },
    Adaptive { field: SizingField, eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MesherOptions {
    /// Maximum size ratio between touching cells; realized as a power of two.
    pub gradation: f64,
    /// Boundary snapping never creates dihedral angles below this.
    pub quality_floor_deg: f64,
}

impl Default for MesherOptions {
    fn default() -> Self {
        Self { gradation: 2.0, quality_floor_deg: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MesherConfig {
    pub mode: MeshMode,
    pub options: MesherOptions,
}

impl MesherConfig {
    pub fn uniform(size: f64) -> Self {
        Self { mode: MeshMode::Uniform { size }, options: MesherOptions::default() }
    }

    pub fn adaptive(field: SizingField, eta: f64) -> Self {
        Self { mode: MeshMode::Adaptive { field, eta }, options: MesherOptions::default() }
    }
}

/// Smallest allowed local size relative to the bounding-box diagonal.
pub const MIN_SIZE_REL: f64 = 1e-3;
const MAX_COARSENING: i32 = 3;

pub fn generate(boundary: &BoundaryMesh, cfg: &MesherConfig) -> Result<TetMesh, MesherError> {
    let opts = &cfg.options;
    if !(opts.gradation >= 1.0) {
        return Err(MesherError::InvalidConfig(format!("gradation {} < 1", opts.gradation)));
    }
    let max_jump = (opts.gradation.log2().floor() as u8).max(1);
    let diag = boundary.diagonal();
    let bbox = boundary.bbox();
    let mut tree = match &cfg.mode {
        MeshMode::Uniform { size } => {
            let size = *size;
            if !(size > 0.0 && size < diag / 4.0) {
                return Err(MesherError::InvalidConfig(format!("size {size} not in (0, {})", diag / 4.0)));
            }
            if size < MIN_SIZE_REL * diag {
                return Err(MesherError::FieldTooFine { size, limit: MIN_SIZE_REL * diag });
            }
            Octree::new(&bbox, std::f64::consts::SQRT_2 * size)
        }
        MeshMode::Adaptive { field, eta } => {
            let eta = *eta;
            if !(eta > 0.0) {
                return Err(MesherError::InvalidConfig(format!("eta {eta} must be positive")));
            }
            if field.is_empty() {
                return Err(MesherError::InvalidConfig("empty sizing field".into()));
            }
            let (smin, smed, smax) = (field.min_size(), field.median_size(), field.max_size());
            if !(smin > 0.0) {
                return Err(MesherError::InvalidConfig(format!("non-positive size {smin}")));
            }
            if eta * smin < MIN_SIZE_REL * diag {
                return Err(MesherError::FieldTooFine { size: eta * smin, limit: MIN_SIZE_REL * diag });
            }
            let levels = ((smax / smed).log2().ceil() as i32).clamp(0, MAX_COARSENING);
            let h0 = 2f64.powi(levels) * std::f64::consts::SQRT_2 * eta * smed;
            let mut tree = Octree::new(&bbox, h0);
            // Final edges fall in (η·s, 2η·s], around the √2·η·s of a uniform mesh.
            tree.refine(|g, c| {
                let x = g.centre_point(c);
                g.edge(c) > 2.0 * eta * field.interpolate_size(&x) && !outside(boundary, &x, g.half_diagonal(c))
            });
            tree
        }
    };
    tree.balance(max_jump);
    let leaves: Vec<_> = tree
        .sorted_leaves()
        .into_iter()
        .filter(|c| !outside(boundary, &tree.centre_point(c), tree.half_diagonal(c)))
        .collect();
    let lattice = tetra::tetrahedralize(&leaves);
    let points = lattice.points.iter().map(|u| tree.point(u)).collect();
    carve::carve(boundary, points, lattice.tets, opts.quality_floor_deg)
}

/// Cell lies wholly outside Ω.
fn outside(boundary: &BoundaryMesh, x: &crate::Vec3, half_diagonal: f64) -> bool {
    boundary.closest_point(x).distance > half_diagonal && !boundary.is_inside(x)
}

pub fn mesh_uniform(boundary: &BoundaryMesh, size: f64) -> Result<TetMesh, MesherError> {
    generate(boundary, &MesherConfig::uniform(size))
}

pub fn mesh_adaptive(boundary: &BoundaryMesh, field: &SizingField, eta: f64) -> Result<TetMesh, MesherError> {
    generate(boundary, &MesherConfig::adaptive(field.clone(), eta))
}

/// Uniform mesh whose vertex count is closest to `target`, found by
/// bisection on the size. Returns the mesh and its size.
pub fn mesh_uniform_with_vertices(boundary: &BoundaryMesh, target: usize) -> Result<(TetMesh, f64), MesherError> {
    let diag = boundary.diagonal();
    let (mut lo, mut hi) = (MIN_SIZE_REL * diag, diag / 4.0 * 0.999);
    let mut best: Option<(TetMesh, f64)> = None;
    let dist = |n: usize| (n as f64 / target as f64).ln().abs();
    for _ in 0..24 {
        let size = (lo * hi).sqrt();
        let m = mesh_uniform(boundary, size)?;
        let n = m.num_vertices();
        if best.as_ref().is_none_or(|(b, _)| dist(n) < dist(b.num_vertices())) {
            best = Some((m, size));
        }
        if n == target || hi / lo < 1.0 + 1e-4 {
            break;
        }
        if n > target {
            lo = size;
        } else {
            hi = size;
        }
    }
    Ok(best.unwrap())
}

/// Write the η-scaled field as a `.pos` background view.
pub fn export_background_field(field: &SizingField, eta: f64, path: impl AsRef<Path>) -> std::io::Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    sizing::write_pos(field, eta, f)
}

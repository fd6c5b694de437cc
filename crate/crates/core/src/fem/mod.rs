//! P1 tetrahedral finite elements for Δu = f with Dirichlet data.
//!
//! The assembled stiffness matrix K is positive semi-definite; the discrete
//! Laplacian is L = −K, so the interior equations read
//! K_II u_I = −(M f)_I − K_IB g_B.

pub mod io;
mod mesh;

use std::sync::Arc;

use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rayon::prelude::*;

use crate::geometry::Vec3;
use crate::wos::PoissonProblem;

pub use mesh::{barycentric, barycentric_gradients, dihedral_angles, signed_volume, TetMesh, TET_EDGES, TET_FACES};

#[derive(Debug, thiserror::Error)]
pub enum FemError {
    #[error("invalid tet mesh: {0}")]
    InvalidMesh(String),
    #[error("tet {tet} is degenerate (volume {volume:e})")]
    DegenerateElement { tet: usize, volume: f64 },
    #[error("conjugate gradients stopped at relative residual {residual:e} after {iterations} iterations")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("point {0:?} is outside the mesh")]
    PointOutsideMesh(Vec3),
    #[error("reference norm is zero")]
    ZeroReference,
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Assembled system before boundary elimination.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub mesh: Arc<TetMesh>,
    /// K = −L, symmetric, zero row sums.
    pub stiffness: CsrMatrix<f64>,
    /// Lumped mass, one entry per vertex.
    pub mass: Vec<f64>,
    /// M f at the vertices.
    pub rhs: Vec<f64>,
    /// g at the projection of each boundary vertex; zero elsewhere.
    pub dirichlet: Vec<f64>,
}

/// Element stiffness `V ∇λ_i · ∇λ_j`.
pub fn element_stiffness(p: &[Vec3; 4]) -> ([[f64; 4]; 4], f64) {
    let (g, vol) = barycentric_gradients(p);
    let mut k = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in i..4 {
            let v = vol * g[i].dot(&g[j]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    (k, vol)
}

pub fn assemble(mesh: Arc<TetMesh>, prob: &PoissonProblem) -> Result<FemSystem, FemError> {
    let n = mesh.num_vertices();
    let eps_vol = 1e-14 * mesh.bbox().diagonal().powi(3);
    if let Some((tet, &volume)) = mesh.volumes().iter().enumerate().find(|(_, &v)| v < eps_vol) {
        return Err(FemError::DegenerateElement { tet, volume });
    }
    let locals: Vec<[[f64; 4]; 4]> = (0..mesh.num_tets())
        .into_par_iter()
        .map(|t| element_stiffness(&mesh.corners(t)).0)
        .collect();
    let mut coo = CooMatrix::new(n, n);
    let mut mass = vec![0.0; n];
    for (t, k) in locals.iter().enumerate() {
        let tet = mesh.tets()[t];
        for i in 0..4 {
            mass[tet[i]] += 0.25 * mesh.volumes()[t];
            for j in 0..4 {
                coo.push(tet[i], tet[j], k[i][j]);
            }
        }
    }
    let stiffness = CsrMatrix::from(&coo);
    let rhs: Vec<f64> = mesh.vertices().par_iter().zip(&mass).map(|(v, m)| m * prob.f.eval(v)).collect();
    let dirichlet: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|v| if mesh.is_boundary(v) { prob.boundary_value(&mesh.vertices()[v]) } else { 0.0 })
        .collect();
    Ok(FemSystem { mesh, stiffness, mass, rhs, dirichlet })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Vertex values on a mesh.
#[derive(Debug, Clone)]
pub struct Solution {
    pub mesh: Arc<TetMesh>,
    pub values: Vec<f64>,
    pub stats: SolveStats,
}

struct Csr {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Csr {
    fn mul(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.offsets[r]..self.offsets[r + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yr = s;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Required relative residual.
pub const CG_TOLERANCE: f64 = 1e-10;
/// Iteration continues to this residual while the budget allows, so that the
/// solution error (residual times condition number) also stays near 1e-10.
pub const CG_TARGET: f64 = 1e-12;

/// Jacobi-preconditioned conjugate gradients on the interior unknowns.
pub fn solve(sys: &FemSystem) -> Result<Solution, FemError> {
    let mesh = &sys.mesh;
    let n = mesh.num_vertices();
    let mut index = vec![usize::MAX; n];
    let mut interior = Vec::new();
    for v in 0..n {
        if !mesh.is_boundary(v) {
            index[v] = interior.len();
            interior.push(v);
        }
    }
    let dof = interior.len();
    let k = &sys.stiffness;
    let mut a = Csr { offsets: Vec::with_capacity(dof + 1), cols: Vec::new(), vals: Vec::new() };
    let mut b = vec![0.0; dof];
    let mut diag = vec![0.0; dof];
    a.offsets.push(0);
    for (r, &v) in interior.iter().enumerate() {
        let row = k.row(v);
        let mut acc = -sys.rhs[v];
        for (&c, &val) in row.col_indices().iter().zip(row.values()) {
            if index[c] != usize::MAX {
                a.cols.push(index[c]);
                a.vals.push(val);
                if c == v {
                    diag[r] = val;
                }
            } else {
                acc -= val * sys.dirichlet[c];
            }
        }
        b[r] = acc;
        a.offsets.push(a.cols.len());
    }

    let mut x = vec![0.0; dof];
    let b_norm = dot(&b, &b).sqrt();
    let mut stats = SolveStats { iterations: 0, residual: 0.0 };
    if dof > 0 && b_norm > 0.0 {
        let max_iter = ((10.0 * (dof as f64).sqrt()) as usize).max(100);
        let inv_diag: Vec<f64> = diag.iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();
        let mut r = b.clone();
        let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; dof];
        let mut rz = dot(&r, &z);
        let mut res = 1.0;
        let mut it = 0;
        while it < max_iter {
            a.mul(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for i in 0..dof {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            it += 1;
            res = dot(&r, &r).sqrt() / b_norm;
            if res <= CG_TARGET {
                break;
            }
            for i in 0..dof {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..dof {
                p[i] = z[i] + beta * p[i];
            }
        }
        // Recompute the true residual; the recursive one drifts.
        let mut ax = vec![0.0; dof];
        a.mul(&x, &mut ax);
        let true_res = ax.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / b_norm;
        stats = SolveStats { iterations: it, residual: true_res };
        if !(res <= CG_TOLERANCE) || !true_res.is_finite() {
            return Err(FemError::NoConvergence { iterations: it, residual: res });
        }
    }
    let mut values = sys.dirichlet.clone();
    for (r, &v) in interior.iter().enumerate() {
        values[v] = x[r];
    }
    Ok(Solution { mesh: mesh.clone(), values, stats })
}

/// Assemble and solve in one go.
pub fn solve_problem(mesh: Arc<TetMesh>, prob: &PoissonProblem) -> Result<Solution, FemError> {
    solve(&assemble(mesh, prob)?)
}

impl Solution {
    fn eval_in(&self, t: usize, x: &Vec3) -> f64 {
        let tet = self.mesh.tets()[t];
        let b = barycentric(&self.mesh.corners(t), x);
        (0..4).map(|k| b[k] * self.values[tet[k]]).sum()
    }

    /// Barycentric interpolation in the containing tet.
    pub fn interpolate(&self, x: &Vec3) -> Result<f64, FemError> {
        let t = self.mesh.locate(x).ok_or(FemError::PointOutsideMesh(*x))?;
        Ok(self.eval_in(t, x))
    }

    /// Like `interpolate`, but points outside the mesh take the value at the
    /// nearest point of the nearest tet.
    pub fn at(&self, x: &Vec3) -> f64 {
        let (t, d) = self.mesh.nearest_tet(x);
        if d == 0.0 {
            return self.eval_in(t, x);
        }
        let p = self.mesh.corners(t);
        let q = TET_FACES
            .iter()
            .map(|f| crate::geometry::predicates::closest_point_on_triangle(x, &p[f[0]], &p[f[1]], &p[f[2]]))
            .min_by(|a, c| (a - x).norm_squared().total_cmp(&(c - x).norm_squared()))
            .unwrap_or(p[0]);
        self.eval_in(t, &q)
    }

    pub fn sample(&self, points: &[Vec3]) -> Vec<f64> {
        points.par_iter().map(|p| self.at(p)).collect()
    }

    /// Constant P1 gradient on tet `t`.
    pub fn tet_gradient(&self, t: usize) -> Vec3 {
        let tet = self.mesh.tets()[t];
        let (g, _) = barycentric_gradients(&self.mesh.corners(t));
        (0..4).map(|k| g[k] * self.values[tet[k]]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Norm {
    L2,
    Linf,
}

/// ‖u − u_ref‖ / ‖u_ref‖ over paired samples.
pub fn relative_error_values(u: &[f64], reference: &[f64], norm: Norm) -> Result<f64, FemError> {
    assert_eq!(u.len(), reference.len());
    let (num, den) = match norm {
        Norm::L2 => (
            u.iter().zip(reference).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(),
            reference.iter().map(|b| b * b).sum::<f64>().sqrt(),
        ),
        Norm::Linf => (
            u.iter().zip(reference).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max),
            reference.iter().map(|b| b.abs()).fold(0.0, f64::max),
        ),
    };
    if den < 1e-14 {
        return Err(FemError::ZeroReference);
    }
    Ok(num / den)
}

/// Relative error of `sol` against any reference field over probe points.
pub fn relative_error(
    sol: &Solution,
    reference: impl Fn(&Vec3) -> f64 + Sync,
    probes: &[Vec3],
    norm: Norm,
) -> Result<f64, FemError> {
    let u = sol.sample(probes);
    let r: Vec<f64> = probes.par_iter().map(|p| reference(p)).collect();
    relative_error_values(&u, &r, norm)
}

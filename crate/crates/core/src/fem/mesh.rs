use std::collections::HashMap;
use std::sync::OnceLock;

use crate::geometry::{predicates::closest_point_on_triangle, Aabb, BoundaryMesh, Bvh, Vec3};

use super::FemError;

/// Outward faces of a positively oriented tet `[a, b, c, d]`.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];
pub const TET_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

pub fn signed_volume(p: &[Vec3; 4]) -> f64 {
    (p[1] - p[0]).dot(&(p[2] - p[0]).cross(&(p[3] - p[0]))) / 6.0
}

/// Gradients of the four barycentric coordinates and the signed volume.
pub fn barycentric_gradients(p: &[Vec3; 4]) -> ([Vec3; 4], f64) {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let e3 = p[3] - p[0];
    let det = e1.dot(&e2.cross(&e3));
    let g1 = e2.cross(&e3) / det;
    let g2 = e3.cross(&e1) / det;
    let g3 = e1.cross(&e2) / det;
    ([-(g1 + g2 + g3), g1, g2, g3], det / 6.0)
}

/// Barycentric coordinates of `x` in the tet.
pub fn barycentric(p: &[Vec3; 4], x: &Vec3) -> [f64; 4] {
    let (g, _) = barycentric_gradients(p);
    let d = x - p[0];
    let l1 = g[1].dot(&d);
    let l2 = g[2].dot(&d);
    let l3 = g[3].dot(&d);
    [1.0 - l1 - l2 - l3, l1, l2, l3]
}

/// Six interior dihedral angles in radians.
pub fn dihedral_angles(p: &[Vec3; 4]) -> [f64; 6] {
    let (g, _) = barycentric_gradients(p);
    let mut out = [0.0; 6];
    // Edge (i, j) is opposite faces k and l; the angle there is π minus the
    // angle between the face normals ∇λ_k, ∇λ_l.
    for (e, [i, j]) in TET_EDGES.iter().enumerate() {
        let mut kl = (0..4).filter(|v| v != i && v != j);
        let k = kl.next().unwrap();
        let l = kl.next().unwrap();
        let c = g[k].dot(&g[l]) / (g[k].norm() * g[l].norm());
        out[e] = std::f64::consts::PI - c.clamp(-1.0, 1.0).acos();
    }
    out
}

/// Conforming tetrahedral mesh with positively oriented elements.
#[derive(Debug)]
pub struct TetMesh {
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    volumes: Vec<f64>,
    boundary_faces: Vec<[usize; 3]>,
    boundary_mask: Vec<bool>,
    bbox: Aabb,
    locator: OnceLock<Bvh>,
}

impl Clone for TetMesh {
    fn clone(&self) -> Self {
        Self {
            vertices: self.vertices.clone(),
            tets: self.tets.clone(),
            volumes: self.volumes.clone(),
            boundary_faces: self.boundary_faces.clone(),
            boundary_mask: self.boundary_mask.clone(),
            bbox: self.bbox,
            locator: OnceLock::new(),
        }
    }
}

impl PartialEq for TetMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.tets == other.tets
    }
}

/// Sorted face and the parity of the sorting permutation.
fn sorted3(f: [usize; 3]) -> ([usize; 3], bool) {
    let mut s = f;
    s.sort_unstable();
    // A cyclic rotation of the sorted triple has even parity.
    let even = (0..3).any(|r| [f[r], f[(r + 1) % 3], f[(r + 2) % 3]] == s);
    (s, even)
}

impl TetMesh {
    /// Validates orientation, index range, face conformity, boundary
    /// watertightness and vertex usage.
    pub fn new(vertices: Vec<Vec3>, tets: Vec<[usize; 4]>) -> Result<Self, FemError> {
        if tets.is_empty() {
            return Err(FemError::InvalidMesh("no tetrahedra".into()));
        }
        let nv = vertices.len();
        let mut used = vec![false; nv];
        let mut volumes = Vec::with_capacity(tets.len());
        for (t, tet) in tets.iter().enumerate() {
            for &v in tet {
                if v >= nv {
                    return Err(FemError::InvalidMesh(format!("tet {t} references vertex {v} of {nv}")));
                }
                used[v] = true;
            }
            let vol = signed_volume(&tet.map(|i| vertices[i]));
            if !(vol > 0.0) {
                return Err(FemError::InvalidMesh(format!("tet {t} has non-positive volume {vol:e}")));
            }
            volumes.push(vol);
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(FemError::InvalidMesh(format!("vertex {v} is not referenced")));
        }

        // Sort-based face counting.
        let mut faces: Vec<([usize; 3], u32, bool)> = Vec::with_capacity(4 * tets.len());
        for (t, tet) in tets.iter().enumerate() {
            for (k, f) in TET_FACES.iter().enumerate() {
                let (key, even) = sorted3(f.map(|i| tet[i]));
                faces.push((key, (t as u32) << 2 | k as u32, even));
            }
        }
        faces.sort_unstable();
        let mut boundary_faces = Vec::new();
        let mut i = 0;
        while i < faces.len() {
            let mut j = i + 1;
            while j < faces.len() && faces[j].0 == faces[i].0 {
                j += 1;
            }
            match j - i {
                1 => {
                    let tag = faces[i].1;
                    let tet = tets[(tag >> 2) as usize];
                    boundary_faces.push(TET_FACES[(tag & 3) as usize].map(|c| tet[c]));
                }
                2 if faces[i].2 != faces[i + 1].2 => {}
                2 => return Err(FemError::InvalidMesh(format!("tets overlap across face {:?}", faces[i].0))),
                c => return Err(FemError::InvalidMesh(format!("face {:?} shared by {c} tets", faces[i].0))),
            }
            i = j;
        }

        let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
        for f in &boundary_faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        if let Some((e, c)) = edge_count.iter().find(|(_, &c)| c != 2) {
            return Err(FemError::InvalidMesh(format!("boundary edge {e:?} is in {c} boundary faces")));
        }
        let mut boundary_mask = vec![false; nv];
        for f in &boundary_faces {
            for &v in f {
                boundary_mask[v] = true;
            }
        }
        let bbox = Aabb::from_points(&vertices);
        Ok(Self { vertices, tets, volumes, boundary_faces, boundary_mask, bbox, locator: OnceLock::new() })
    }

    /// Box split into `n` cells per axis, six tets per cell sharing the main
    /// cell diagonal.
    pub fn structured_box(min: Vec3, max: Vec3, n: [usize; 3]) -> Self {
        let id = |i: usize, j: usize, k: usize| (k * (n[1] + 1) + j) * (n[0] + 1) + i;
        let mut vertices = Vec::with_capacity((n[0] + 1) * (n[1] + 1) * (n[2] + 1));
        for k in 0..=n[2] {
            for j in 0..=n[1] {
                for i in 0..=n[0] {
                    let f = Vec3::new(i as f64 / n[0] as f64, j as f64 / n[1] as f64, k as f64 / n[2] as f64);
                    vertices.push(min + (max - min).component_mul(&f));
                }
            }
        }
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut tets = Vec::with_capacity(6 * n[0] * n[1] * n[2]);
        for k in 0..n[2] {
            for j in 0..n[1] {
                for i in 0..n[0] {
                    for perm in PERMS {
                        let mut c = [i, j, k];
                        let mut t = [id(i, j, k), 0, 0, 0];
                        for (s, &axis) in perm.iter().enumerate() {
                            c[axis] += 1;
                            t[s + 1] = id(c[0], c[1], c[2]);
                        }
                        if signed_volume(&t.map(|q| vertices[q])) < 0.0 {
                            t.swap(2, 3);
                        }
                        tets.push(t);
                    }
                }
            }
        }
        Self::new(vertices, tets).expect("structured box is valid")
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_tets(&self) -> usize {
        self.tets.len()
    }

    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn boundary_faces(&self) -> &[[usize; 3]] {
        &self.boundary_faces
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary_mask
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary_mask[v]
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    pub fn corners(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|i| self.vertices[i])
    }

    pub fn centroid(&self, t: usize) -> Vec3 {
        let c = self.corners(t);
        (c[0] + c[1] + c[2] + c[3]) / 4.0
    }

    pub fn min_dihedral(&self) -> f64 {
        (0..self.tets.len())
            .map(|t| dihedral_angles(&self.corners(t)).into_iter().fold(f64::INFINITY, f64::min))
            .fold(f64::INFINITY, f64::min)
    }

    /// Unique edges as sorted vertex pairs, in sorted order.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = self
            .tets
            .iter()
            .flat_map(|t| TET_EDGES.map(|[a, b]| [t[a].min(t[b]), t[a].max(t[b])]))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    /// The boundary surface as a triangle mesh (unreferenced vertices dropped).
    pub fn boundary_surface(&self) -> Result<BoundaryMesh, crate::geometry::GeometryError> {
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut verts = Vec::new();
        let tris = self
            .boundary_faces
            .iter()
            .map(|f| {
                f.map(|v| {
                    if remap[v] == usize::MAX {
                        remap[v] = verts.len();
                        verts.push(self.vertices[v]);
                    }
                    remap[v]
                })
            })
            .collect();
        BoundaryMesh::new(verts, tris)
    }

    fn locator(&self) -> &Bvh {
        self.locator.get_or_init(|| {
            let boxes: Vec<Aabb> = (0..self.tets.len()).map(|t| Aabb::from_points(&self.corners(t))).collect();
            Bvh::build(&boxes)
        })
    }

    /// Distance from `x` to tet `t`, zero inside.
    pub fn distance_to_tet(&self, t: usize, x: &Vec3) -> f64 {
        let p = self.corners(t);
        let b = barycentric(&p, x);
        if b.iter().all(|&l| l >= 0.0) {
            return 0.0;
        }
        TET_FACES
            .iter()
            .map(|f| (closest_point_on_triangle(x, &p[f[0]], &p[f[1]], &p[f[2]]) - x).norm_squared())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }

    /// Nearest tet to `x` (containing tet when inside, lowest index on ties)
    /// and the distance to it.
    pub fn nearest_tet(&self, x: &Vec3) -> (usize, f64) {
        let (t, d2) = self
            .locator()
            .closest(x, |t| self.distance_to_tet(t, x).powi(2))
            .expect("mesh has tets");
        (t, d2.sqrt())
    }

    /// Containing tet within tolerance `1e-9 · diagonal`.
    pub fn locate(&self, x: &Vec3) -> Option<usize> {
        let (t, d) = self.nearest_tet(x);
        (d <= 1e-9 * self.bbox.diagonal()).then_some(t)
    }
}

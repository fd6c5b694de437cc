//! Clip a lattice tet mesh to the domain and snap its boundary onto ∂Ω.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::fem::{dihedral_angles, signed_volume, TetMesh, TET_EDGES, TET_FACES};
use crate::geometry::{Aabb, BoundaryMesh, Vec3};

use super::MesherError;

type Face = [usize; 3];

fn face_key(t: &[usize; 4], f: usize) -> Face {
    let mut k = TET_FACES[f].map(|i| t[i]);
    k.sort_unstable();
    k
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

struct Topology {
    /// Up to two tets per face.
    face_tets: HashMap<Face, [usize; 2]>,
    edge_tets: HashMap<(usize, usize), Vec<usize>>,
}

impl Topology {
    fn new(tets: &[[usize; 4]]) -> Self {
        let mut face_tets: HashMap<Face, [usize; 2]> = HashMap::with_capacity(tets.len() * 2);
        let mut edge_tets: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(tets.len() * 2);
        for (i, t) in tets.iter().enumerate() {
            for f in 0..4 {
                face_tets
                    .entry(face_key(t, f))
                    .and_modify(|e| e[1] = i)
                    .or_insert([i, usize::MAX]);
            }
            for [a, b] in TET_EDGES {
                edge_tets.entry(edge_key(t[a], t[b])).or_default().push(i);
            }
        }
        Self { face_tets, edge_tets }
    }

    fn neighbour(&self, tets: &[[usize; 4]], t: usize, f: usize) -> Option<usize> {
        let e = self.face_tets[&face_key(&tets[t], f)];
        let o = if e[0] == t { e[1] } else { e[0] };
        (o != usize::MAX).then_some(o)
    }
}

/// Boundary faces of the kept set, in tet order.
fn boundary_faces(tets: &[[usize; 4]], topo: &Topology, keep: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for t in 0..tets.len() {
        if !keep[t] {
            continue;
        }
        for f in 0..4 {
            if !topo.neighbour(tets, t, f).is_some_and(|o| keep[o]) {
                out.push((t, f));
            }
        }
    }
    out
}

fn nonmanifold_edges(tets: &[[usize; 4]], topo: &Topology, keep: &[bool]) -> Vec<(usize, usize)> {
    let mut count: HashMap<(usize, usize), u32> = HashMap::new();
    let mut order = Vec::new();
    for (t, f) in boundary_faces(tets, topo, keep) {
        let v = TET_FACES[f].map(|i| tets[t][i]);
        for k in 0..3 {
            let e = edge_key(v[k], v[(k + 1) % 3]);
            let c = count.entry(e).or_insert(0);
            if *c == 0 {
                order.push(e);
            }
            *c += 1;
        }
    }
    order.into_iter().filter(|e| count[e] != 2).collect()
}

/// Keep only the largest face-connected component (lowest tet index wins ties).
fn largest_component(tets: &[[usize; 4]], topo: &Topology, keep: &mut [bool]) {
    let mut label = vec![usize::MAX; tets.len()];
    let mut sizes = Vec::new();
    for s in 0..tets.len() {
        if !keep[s] || label[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut n = 0;
        let mut stack = vec![s];
        label[s] = id;
        while let Some(t) = stack.pop() {
            n += 1;
            for f in 0..4 {
                if let Some(o) = topo.neighbour(tets, t, f) {
                    if keep[o] && label[o] == usize::MAX {
                        label[o] = id;
                        stack.push(o);
                    }
                }
            }
        }
        sizes.push(n);
    }
    let Some(best) = (0..sizes.len()).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))) else { return };
    for t in 0..tets.len() {
        if keep[t] && label[t] != best {
            keep[t] = false;
        }
    }
}

fn min_dihedral(p: &[Vec3; 4]) -> f64 {
    dihedral_angles(p).into_iter().fold(f64::INFINITY, f64::min)
}

fn region(points: &[Vec3], verts: &[usize]) -> String {
    let b = Aabb::from_points(verts.iter().map(|&v| &points[v]));
    format!("[{:.4}, {:.4}, {:.4}]..[{:.4}, {:.4}, {:.4}]", b.min.x, b.min.y, b.min.z, b.max.x, b.max.y, b.max.z)
}

fn edge_is_manifold(tets: &[[usize; 4]], topo: &Topology, keep: &[bool], e: (usize, usize)) -> bool {
    let mut faces = 0;
    for &t in &topo.edge_tets[&e] {
        if !keep[t] {
            continue;
        }
        for f in 0..4 {
            let face = TET_FACES[f].map(|i| tets[t][i]);
            if face.contains(&e.0) && face.contains(&e.1) && !topo.neighbour(tets, t, f).is_some_and(|o| keep[o]) {
                faces += 1;
            }
        }
    }
    faces == 0 || faces == 2
}

/// Drop exposed all-boundary tets that snapping left below the quality
/// floor, as long as the boundary stays manifold.
fn collapse_slivers(points: &[Vec3], tets: &[[usize; 4]], topo: &Topology, pinned: &[bool], floor: f64, keep: &mut [bool]) {
    loop {
        let mut changed = false;
        for t in 0..tets.len() {
            if !keep[t] || !pinned[t] || min_dihedral(&tets[t].map(|v| points[v])) >= floor {
                continue;
            }
            if (0..4).all(|f| topo.neighbour(tets, t, f).is_some_and(|o| keep[o])) {
                continue;
            }
            keep[t] = false;
            if TET_EDGES.iter().all(|&[a, b]| edge_is_manifold(tets, topo, keep, edge_key(tets[t][a], tets[t][b]))) {
                changed = true;
            } else {
                keep[t] = true;
            }
        }
        if !changed {
            break;
        }
    }
}

const REPAIR_ROUNDS: usize = 16;
const SNAP_HALVINGS: usize = 8;
const SNAP_PASSES: usize = 4;

pub fn carve(
    boundary: &BoundaryMesh,
    mut points: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    quality_floor_deg: f64,
) -> Result<TetMesh, MesherError> {
    let phi: Vec<f64> = points
        .par_iter()
        .map(|p| {
            let d = boundary.closest_point(p).distance;
            if boundary.is_inside(p) {
                -d
            } else {
                d
            }
        })
        .collect();
    let mut keep: Vec<bool> = tets.iter().map(|t| t.iter().map(|&v| phi[v]).sum::<f64>() < 0.0).collect();
    let topo = Topology::new(&tets);

    let mut rounds = 0;
    loop {
        let bad = nonmanifold_edges(&tets, &topo, &keep);
        if bad.is_empty() {
            break;
        }
        rounds += 1;
        if rounds > REPAIR_ROUNDS {
            let verts: Vec<usize> = bad.iter().flat_map(|&(a, b)| [a, b]).collect();
            return Err(MesherError::MeshingFailed { region: region(&points, &verts) });
        }
        for e in bad {
            for &t in &topo.edge_tets[&e] {
                keep[t] = true;
            }
        }
    }
    largest_component(&tets, &topo, &mut keep);
    if !keep.iter().any(|&k| k) {
        return Err(MesherError::MeshingFailed { region: "no lattice tet inside the domain".into() });
    }

    // Snap boundary vertices, backing off where a tet would drop below the floor.
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); points.len()];
    for (t, tet) in tets.iter().enumerate() {
        if keep[t] {
            for &v in tet {
                incident[v].push(t);
            }
        }
    }
    let mut on_boundary = vec![false; points.len()];
    for (t, f) in boundary_faces(&tets, &topo, &keep) {
        for i in TET_FACES[f] {
            on_boundary[tets[t][i]] = true;
        }
    }
    // Tets with every vertex on the boundary only couple Dirichlet values.
    let pinned: Vec<bool> = tets.iter().zip(&keep).map(|(t, &k)| k && t.iter().all(|&v| on_boundary[v])).collect();
    let floor = quality_floor_deg.to_radians();
    let vol_floor = 1e-12 * boundary.diagonal().powi(3);
    let targets: Vec<Option<Vec3>> = (0..points.len())
        .into_par_iter()
        .map(|v| on_boundary[v].then(|| boundary.project_to_boundary(&points[v])))
        .collect();
    for _ in 0..SNAP_PASSES {
        let mut moved = false;
        for v in 0..points.len() {
            let Some(target) = targets[v] else { continue };
            let start = points[v];
            let disp = target - start;
            if disp.norm_squared() == 0.0 {
                continue;
            }
            for h in 0..SNAP_HALVINGS {
                let trial = start + disp * 0.5f64.powi(h as i32);
                let ok = incident[v].iter().all(|&t| {
                    let p = tets[t].map(|w| if w == v { trial } else { points[w] });
                    signed_volume(&p) > vol_floor && (pinned[t] || min_dihedral(&p) >= floor)
                });
                if ok {
                    points[v] = trial;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            break;
        }
    }

    collapse_slivers(&points, &tets, &topo, &pinned, floor, &mut keep);
    largest_component(&tets, &topo, &mut keep);

    // Compact.
    let mut map = vec![usize::MAX; points.len()];
    let mut verts = Vec::new();
    let mut out = Vec::new();
    for (t, tet) in tets.iter().enumerate() {
        if !keep[t] {
            continue;
        }
        out.push(tet.map(|v| {
            if map[v] == usize::MAX {
                map[v] = verts.len();
                verts.push(points[v]);
            }
            map[v]
        }));
    }
    TetMesh::new(verts, out).map_err(|e| MesherError::MeshingFailed { region: e.to_string() })
}

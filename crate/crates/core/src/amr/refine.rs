//! Longest-edge bisection with longest-edge-propagation-path closure.
//!
//! Splitting an edge splits every tet around it, so the mesh stays
//! conforming after each step. Before an edge is split, every tet around it
//! whose own longest edge differs is refined first; edges are totally ordered
//! by (squared length, vertex pair), so these chains are strictly increasing
//! and terminate.

use std::collections::HashMap;

use crate::fem::{dihedral_angles, TetMesh, TET_EDGES};
use crate::geometry::Vec3;

use super::AmrError;

type Edge = (usize, usize);

fn key(a: usize, b: usize) -> Edge {
    (a.min(b), a.max(b))
}

struct Work {
    verts: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    alive: Vec<bool>,
    edge_tets: HashMap<Edge, Vec<usize>>,
}

impl Work {
    fn new(mesh: &TetMesh) -> Self {
        let mut w = Work {
            verts: mesh.vertices().to_vec(),
            tets: Vec::with_capacity(mesh.num_tets() * 2),
            alive: Vec::with_capacity(mesh.num_tets() * 2),
            edge_tets: HashMap::with_capacity(mesh.num_tets() * 2),
        };
        for &t in mesh.tets() {
            w.push(t);
        }
        w
    }

    fn push(&mut self, t: [usize; 4]) -> usize {
        let id = self.tets.len();
        self.tets.push(t);
        self.alive.push(true);
        for [i, j] in TET_EDGES {
            self.edge_tets.entry(key(t[i], t[j])).or_default().push(id);
        }
        id
    }

    fn rank(&self, e: Edge) -> (f64, Edge) {
        ((self.verts[e.0] - self.verts[e.1]).norm_squared(), e)
    }

    fn longest(&self, t: usize) -> Edge {
        let tet = self.tets[t];
        TET_EDGES
            .iter()
            .map(|&[i, j]| key(tet[i], tet[j]))
            .max_by(|a, b| {
                let (la, ea) = self.rank(*a);
                let (lb, eb) = self.rank(*b);
                la.total_cmp(&lb).then(ea.cmp(&eb))
            })
            .unwrap()
    }

    fn split(&mut self, e: Edge, created: &mut Vec<usize>) {
        let around = self.edge_tets.remove(&e).unwrap_or_default();
        let m = self.verts.len();
        self.verts.push((self.verts[e.0] + self.verts[e.1]) * 0.5);
        for s in around {
            self.alive[s] = false;
            let tet = self.tets[s];
            for [i, j] in TET_EDGES {
                let k = key(tet[i], tet[j]);
                if k != e {
                    if let Some(list) = self.edge_tets.get_mut(&k) {
                        list.retain(|&x| x != s);
                    }
                }
            }
            // Replacing one endpoint by the midpoint keeps the orientation.
            let a = tet.map(|v| if v == e.1 { m } else { v });
            let b = tet.map(|v| if v == e.0 { m } else { v });
            created.push(self.push(a));
            created.push(self.push(b));
        }
    }

    /// Bisect tet `t` (if still present) through its longest edge.
    fn refine_tet(&mut self, t: usize, created: &mut Vec<usize>) {
        let mut stack = vec![t];
        while let Some(&s) = stack.last() {
            if !self.alive[s] {
                stack.pop();
                continue;
            }
            let e = self.longest(s);
            let blocker = self.edge_tets[&e].iter().copied().find(|&u| self.longest(u) != e);
            match blocker {
                Some(u) => stack.push(u),
                None => {
                    self.split(e, created);
                    stack.pop();
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineReport {
    pub marked: usize,
    pub new_vertices: usize,
    /// Smallest dihedral angle among the tets created, in degrees.
    pub min_dihedral_deg: f64,
    pub quality_collapse: bool,
}

/// Bisect every tet with error ≥ threshold · max error (nothing is marked
/// when all errors are zero).
pub fn refine_with_report(mesh: &TetMesh, errors: &[f64], threshold: f64) -> Result<(TetMesh, RefineReport), AmrError> {
    assert_eq!(errors.len(), mesh.num_tets(), "one error per tet");
    let max = errors.iter().cloned().fold(0.0, f64::max);
    let marked: Vec<usize> = if max > 0.0 {
        (0..errors.len()).filter(|&t| errors[t] >= threshold * max).collect()
    } else {
        Vec::new()
    };
    if marked.is_empty() {
        let report = RefineReport { marked: 0, new_vertices: 0, min_dihedral_deg: f64::NAN, quality_collapse: false };
        return Ok((mesh.clone(), report));
    }
    let mut work = Work::new(mesh);
    let mut created = Vec::new();
    for &t in &marked {
        work.refine_tet(t, &mut created);
    }
    let min_dihedral_deg = created
        .iter()
        .filter(|&&t| work.alive[t])
        .map(|&t| {
            let p = work.tets[t].map(|v| work.verts[v]);
            dihedral_angles(&p).into_iter().fold(f64::INFINITY, f64::min)
        })
        .fold(f64::INFINITY, f64::min)
        .to_degrees();
    let quality_collapse = min_dihedral_deg < 1.0;
    if quality_collapse {
        log::warn!("{}", AmrError::QualityCollapse { degrees: min_dihedral_deg });
    }
    let new_vertices = work.verts.len() - mesh.num_vertices();
    let tets: Vec<[usize; 4]> = work.tets.iter().zip(&work.alive).filter(|(_, &a)| a).map(|(t, _)| *t).collect();
    let out = TetMesh::new(work.verts, tets)?;
    Ok((out, RefineReport { marked: marked.len(), new_vertices, min_dihedral_deg, quality_collapse }))
}

pub fn refine(mesh: &TetMesh, errors: &[f64], threshold: f64) -> Result<TetMesh, AmrError> {
    refine_with_report(mesh, errors, threshold).map(|(m, _)| m)
}

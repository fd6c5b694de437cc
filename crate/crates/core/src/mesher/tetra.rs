//! Conforming tetrahedralization of a balanced octree.
//!
//! Each leaf is coned from its centre over a triangulation of its six faces.
//! A face square whose centre is a leaf corner (a finer neighbour) is split
//! into four; otherwise it is fanned from its centre over its corners and the
//! edge midpoints that are leaf corners. Both leaves sharing a face see the
//! same corner set, so they triangulate it identically.

use std::collections::{HashMap, HashSet};

use super::octree::{cell_units, centre, corner, Cell, Lattice};

pub struct LatticeMesh {
    pub points: Vec<Lattice>,
    pub tets: Vec<[usize; 4]>,
}

struct Builder<'a> {
    corners: &'a HashSet<Lattice>,
    ids: HashMap<Lattice, usize>,
    points: Vec<Lattice>,
    tets: Vec<[usize; 4]>,
}

fn orient(p: [Lattice; 4]) -> i128 {
    let d = |a: usize| -> [i128; 3] { std::array::from_fn(|k| (p[a][k] - p[0][k]) as i128) };
    let (a, b, c) = (d(1), d(2), d(3));
    a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) + a[2] * (b[0] * c[1] - b[1] * c[0])
}

impl Builder<'_> {
    fn id(&mut self, u: Lattice) -> usize {
        *self.ids.entry(u).or_insert_with(|| {
            self.points.push(u);
            self.points.len() - 1
        })
    }

    /// Corner vertices strictly inside segment a–b, in order.
    fn edge_points(&self, a: Lattice, b: Lattice, out: &mut Vec<Lattice>) {
        let len: i64 = (0..3).map(|k| (b[k] - a[k]).abs()).sum();
        if len < 2 {
            return;
        }
        let m: Lattice = std::array::from_fn(|k| (a[k] + b[k]) / 2);
        if self.corners.contains(&m) {
            self.edge_points(a, m, out);
            out.push(m);
            self.edge_points(m, b, out);
        }
    }

    /// Square in the plane normal to `axis`, lower corner `lo`, side `s`.
    fn square(&mut self, cc: Lattice, axis: usize, lo: Lattice, s: i64) {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        let at = |du: i64, dv: i64| -> Lattice {
            let mut p = lo;
            p[u] += du;
            p[v] += dv;
            p
        };
        let mid = at(s / 2, s / 2);
        if s >= 2 && self.corners.contains(&mid) {
            for (du, dv) in [(0, 0), (s / 2, 0), (0, s / 2), (s / 2, s / 2)] {
                self.square(cc, axis, at(du, dv), s / 2);
            }
            return;
        }
        let quad = [at(0, 0), at(s, 0), at(s, s), at(0, s)];
        let mut ring = Vec::with_capacity(8);
        for i in 0..4 {
            ring.push(quad[i]);
            self.edge_points(quad[i], quad[(i + 1) % 4], &mut ring);
        }
        let flip = orient([cc, mid, ring[0], ring[1]]) < 0;
        let c = self.id(cc);
        let m = self.id(mid);
        for i in 0..ring.len() {
            let (mut a, mut b) = (ring[i], ring[(i + 1) % ring.len()]);
            if flip {
                std::mem::swap(&mut a, &mut b);
            }
            let t = [c, m, self.id(a), self.id(b)];
            self.tets.push(t);
        }
    }

    fn cell(&mut self, c: &Cell) {
        let lo = corner(c);
        let s = cell_units(c.0);
        let cc = centre(c);
        for axis in 0..3 {
            for side in [0, s] {
                let mut base = lo;
                base[axis] += side;
                self.square(cc, axis, base, s);
            }
        }
    }
}

pub fn tetrahedralize(leaves: &[Cell]) -> LatticeMesh {
    let mut corners = HashSet::with_capacity(leaves.len() * 2);
    for c in leaves {
        let lo = corner(c);
        let s = cell_units(c.0);
        for m in 0..8 {
            corners.insert([lo[0] + s * (m & 1), lo[1] + s * ((m >> 1) & 1), lo[2] + s * ((m >> 2) & 1)]);
        }
    }
    let mut b = Builder { corners: &corners, ids: HashMap::new(), points: Vec::new(), tets: Vec::new() };
    for c in leaves {
        b.cell(c);
    }
    LatticeMesh { points: b.points, tets: b.tets }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesher::octree::Octree;
    use crate::fem::TetMesh;
    use crate::geometry::{Aabb, Vec3};

    fn build(tree: &Octree) -> TetMesh {
        let lm = tetrahedralize(&tree.sorted_leaves());
        let pts = lm.points.iter().map(|u| tree.point(u)).collect();
        TetMesh::new(pts, lm.tets).unwrap()
    }

    #[test]
    fn uniform_grid_counts() {
        let tree = Octree::new(&Aabb { min: Vec3::zeros(), max: Vec3::repeat(1.0) }, 0.1);
        let m = build(&tree);
        assert_eq!(m.num_vertices(), 11 * 11 * 11 + 1000 + 3 * 10 * 10 * 11);
        assert_eq!(m.num_tets(), 24 * 1000);
        assert!((m.total_volume() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn graded_tree_is_conforming() {
        let mut tree = Octree::new(&Aabb { min: Vec3::zeros(), max: Vec3::new(1.0, 1.5, 0.5) }, 0.25);
        tree.refine(|_, c| c.0 < 4 && tree_corner_near_origin(c));
        tree.balance(1);
        let m = build(&tree);
        assert!((m.total_volume() - 0.75).abs() < 1e-12);
        assert!(m.min_dihedral().to_degrees() > 20.0);
    }

    #[test]
    fn two_level_jumps_still_conform() {
        let mut tree = Octree::new(&Aabb { min: Vec3::zeros(), max: Vec3::repeat(1.0) }, 0.5);
        tree.refine(|_, c| c.0 < 4 && tree_corner_near_origin(c));
        tree.balance(2);
        let m = build(&tree);
        assert!((m.total_volume() - 1.0).abs() < 1e-12);
    }

    fn tree_corner_near_origin(c: &Cell) -> bool {
        corner(c).iter().all(|&x| x == 0)
    }
}

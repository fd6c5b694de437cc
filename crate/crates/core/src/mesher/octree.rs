//! Linear octree over a grid of base cells, addressed by integer lattice
//! coordinates so every derived point is exact.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::geometry::{Aabb, Vec3};

/// Lattice units per base cell along each axis, as a power of two.
pub const UNIT_BITS: u32 = 20;
pub const MAX_LEVEL: u8 = 16;

/// (level, i, j, k): cell index at its level.
pub type Cell = (u8, i64, i64, i64);
pub type Lattice = [i64; 3];

#[derive(Debug, Clone, Copy)]
pub struct Grid {
    origin: Vec3,
    /// Base cell extent per axis.
    cell: Vec3,
    n: [i64; 3],
}

pub struct Octree {
    pub grid: Grid,
    leaves: HashSet<Cell>,
}

pub fn cell_units(level: u8) -> i64 {
    1 << (UNIT_BITS - level as u32)
}

pub fn corner(c: &Cell) -> Lattice {
    let s = cell_units(c.0);
    [c.1 * s, c.2 * s, c.3 * s]
}

pub fn centre(c: &Cell) -> Lattice {
    let h = cell_units(c.0) / 2;
    corner(c).map(|x| x + h)
}

fn children(c: &Cell) -> [Cell; 8] {
    let (l, i, j, k) = *c;
    std::array::from_fn(|m| {
        let m = m as i64;
        (l + 1, 2 * i + (m & 1), 2 * j + ((m >> 1) & 1), 2 * k + ((m >> 2) & 1))
    })
}

impl Octree {
    /// Base grid spanning `bbox` with cells close to `h0` on every axis.
    pub fn new(bbox: &Aabb, h0: f64) -> Self {
        let ext = bbox.extent();
        let n = [0, 1, 2].map(|a| ((ext[a] / h0).round() as i64).max(1));
        let cell = Vec3::new(ext.x / n[0] as f64, ext.y / n[1] as f64, ext.z / n[2] as f64);
        let mut leaves = HashSet::new();
        for i in 0..n[0] {
            for j in 0..n[1] {
                for k in 0..n[2] {
                    leaves.insert((0, i, j, k));
                }
            }
        }
        Self { grid: Grid { origin: bbox.min, cell, n }, leaves }
    }

    pub fn point(&self, u: &Lattice) -> Vec3 {
        self.grid.point(u)
    }

    pub fn centre_point(&self, c: &Cell) -> Vec3 {
        self.grid.centre_point(c)
    }

    pub fn half_diagonal(&self, c: &Cell) -> f64 {
        self.grid.half_diagonal(c)
    }
}

impl Grid {
    pub fn point(&self, u: &Lattice) -> Vec3 {
        let s = (1u64 << UNIT_BITS) as f64;
        Vec3::new(
            self.origin.x + u[0] as f64 / s * self.cell.x,
            self.origin.y + u[1] as f64 / s * self.cell.y,
            self.origin.z + u[2] as f64 / s * self.cell.z,
        )
    }

    /// Longest edge of a cell.
    pub fn edge(&self, c: &Cell) -> f64 {
        self.cell.max() / (1u64 << c.0) as f64
    }

    pub fn half_diagonal(&self, c: &Cell) -> f64 {
        0.5 * self.cell.norm() / (1u64 << c.0) as f64
    }

    pub fn centre_point(&self, c: &Cell) -> Vec3 {
        self.point(&centre(c))
    }
}

impl Octree {
    /// Leaf containing lattice point `u` (half-open cells).
    pub fn find(&self, u: &Lattice) -> Option<Cell> {
        for a in 0..3 {
            if u[a] < 0 || u[a] >= self.grid.n[a] << UNIT_BITS {
                return None;
            }
        }
        (0..=MAX_LEVEL)
            .map(|l| {
                let s = UNIT_BITS - l as u32;
                (l, u[0] >> s, u[1] >> s, u[2] >> s)
            })
            .find(|c| self.leaves.contains(c))
    }

    fn split(&mut self, c: &Cell) -> [Cell; 8] {
        let removed = self.leaves.remove(c);
        debug_assert!(removed);
        let ch = children(c);
        self.leaves.extend(ch);
        ch
    }

    /// Split leaves while `want` asks for it, breadth first.
    pub fn refine(&mut self, want: impl Fn(&Grid, &Cell) -> bool + Sync) {
        let grid = self.grid;
        let mut frontier = self.sorted_leaves();
        while !frontier.is_empty() {
            let split: Vec<bool> = frontier.par_iter().map(|c| c.0 < MAX_LEVEL && want(&grid, c)).collect();
            let mut next = Vec::new();
            for (c, s) in frontier.iter().zip(split) {
                if s {
                    next.extend(self.split(c));
                }
            }
            frontier = next;
        }
    }

    /// Split coarse leaves until leaves sharing a face, edge or corner differ
    /// by at most `max_jump` levels.
    pub fn balance(&mut self, max_jump: u8) {
        let mut stack = self.sorted_leaves();
        stack.reverse();
        while let Some(c) = stack.pop() {
            if !self.leaves.contains(&c) || c.0 <= max_jump {
                continue;
            }
            let lo = corner(&c);
            let s = cell_units(c.0);
            for d in 0..27 {
                if d == 13 {
                    continue;
                }
                let dir = [d % 3, (d / 3) % 3, d / 9];
                let probe: Lattice = std::array::from_fn(|a| match dir[a] {
                    0 => lo[a] - 1,
                    1 => lo[a] + s / 2,
                    _ => lo[a] + s,
                });
                while let Some(nb) = self.find(&probe) {
                    if nb.0 + max_jump >= c.0 {
                        break;
                    }
                    let ch = self.split(&nb);
                    stack.extend(ch);
                }
            }
        }
    }

    pub fn sorted_leaves(&self) -> Vec<Cell> {
        let mut v: Vec<Cell> = self.leaves.iter().copied().collect();
        v.sort_unstable();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_tree(h: f64) -> Octree {
        Octree::new(&Aabb { min: Vec3::zeros(), max: Vec3::repeat(1.0) }, h)
    }

    #[test]
    fn lattice_points_are_exact() {
        let t = unit_tree(0.25);
        assert_eq!(t.sorted_leaves().len(), 64);
        let c = (2, 1, 0, 3);
        assert_eq!(t.centre_point(&c), Vec3::new(0.09375, 0.03125, 0.21875));
        assert_eq!(t.find(&centre(&(0, 3, 3, 3))), Some((0, 3, 3, 3)));
        assert_eq!(t.find(&[-1, 0, 0]), None);
    }

    #[test]
    fn balance_limits_level_jumps() {
        let mut t = unit_tree(0.5);
        t.refine(|_, c| c.0 < 5 && corner(c) == [0, 0, 0]);
        t.balance(1);
        let leaves = t.sorted_leaves();
        for c in &leaves {
            let lo = corner(c);
            let s = cell_units(c.0);
            for d in 0..27 {
                let dir = [d % 3, (d / 3) % 3, d / 9];
                let p: Lattice = std::array::from_fn(|a| [lo[a] - 1, lo[a] + s / 2, lo[a] + s][dir[a] as usize]);
                if let Some(nb) = t.find(&p) {
                    assert!((nb.0 as i32 - c.0 as i32).abs() <= 1, "{c:?} vs {nb:?}");
                }
            }
        }
        // leaves tile the box
        let vol: f64 = leaves.iter().map(|c| 0.125f64.powi(c.0 as i32)).sum();
        assert!((vol - 8.0).abs() < 1e-12);
    }
}

use std::ops::ControlFlow;

use super::{Aabb, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first primitive slot. Interior: index of the left child (the
    /// right child is the next node after the left subtree, stored in `right`).
    start: u32,
    count: u32,
    right: u32,
}

/// Binary bounding volume hierarchy over primitives described only by their
/// boxes. Queries take closures that evaluate the exact primitive predicate.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
}

impl Bvh {
    pub fn build(boxes: &[Aabb]) -> Self {
        let mut order: Vec<u32> = (0..boxes.len() as u32).collect();
        let centroids: Vec<Vec3> = boxes.iter().map(|b| b.center()).collect();
        let mut nodes = Vec::with_capacity(2 * boxes.len() / LEAF_SIZE + 1);
        if !boxes.is_empty() {
            build_recursive(boxes, &centroids, &mut order, 0, boxes.len(), &mut nodes);
        }
        Self { nodes, order }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes.first().map(|n| n.bounds).unwrap_or_else(Aabb::empty)
    }

    /// Nearest primitive to `p`. `dist2` returns the squared distance to a
    /// primitive. Ties are resolved towards the lowest primitive index, so the
    /// result does not depend on the tree layout.
    pub fn closest<F>(&self, p: &Vec3, mut dist2: F) -> Option<(usize, f64)>
    where
        F: FnMut(usize) -> f64,
    {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (f64::INFINITY, usize::MAX);
        let mut stack: Vec<(u32, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].bounds.distance_squared(p)));
        while let Some((ni, box_d2)) = stack.pop() {
            if box_d2 > best.0 {
                continue;
            }
            let node = &self.nodes[ni as usize];
            if node.count > 0 {
                let s = node.start as usize;
                for &prim in &self.order[s..s + node.count as usize] {
                    let prim = prim as usize;
                    let d2 = dist2(prim);
                    if d2 < best.0 || (d2 == best.0 && prim < best.1) {
                        best = (d2, prim);
                    }
                }
            } else {
                let l = ni + 1;
                let r = node.right;
                let dl = self.nodes[l as usize].bounds.distance_squared(p);
                let dr = self.nodes[r as usize].bounds.distance_squared(p);
                // Push the farther child first so the nearer one is popped next.
                if dl <= dr {
                    stack.push((r, dr));
                    stack.push((l, dl));
                } else {
                    stack.push((l, dl));
                    stack.push((r, dr));
                }
            }
        }
        (best.1 != usize::MAX).then_some((best.1, best.0))
    }

    /// Visit primitives whose boxes are hit by the ray segment
    /// `origin + t * dir`, `t` in `[0, t_max]`.
    pub fn visit_ray<F>(&self, origin: &Vec3, dir: &Vec3, t_max: f64, mut f: F) -> ControlFlow<()>
    where
        F: FnMut(usize) -> ControlFlow<()>,
    {
        if self.nodes.is_empty() {
            return ControlFlow::Continue(());
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut stack: Vec<u32> = vec![0];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !node.bounds.intersects_ray(origin, &inv, 0.0, t_max) {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &prim in &self.order[s..s + node.count as usize] {
                    f(prim as usize)?;
                }
            } else {
                stack.push(node.right);
                stack.push(ni + 1);
            }
        }
        ControlFlow::Continue(())
    }

    /// Visit primitives whose boxes overlap `query`.
    pub fn visit_overlapping<F>(&self, query: &Aabb, mut f: F) -> ControlFlow<()>
    where
        F: FnMut(usize) -> ControlFlow<()>,
    {
        if self.nodes.is_empty() {
            return ControlFlow::Continue(());
        }
        let mut stack: Vec<u32> = vec![0];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !node.bounds.overlaps(query) {
                continue;
            }
            if node.count > 0 {
                let s = node.start as usize;
                for &prim in &self.order[s..s + node.count as usize] {
                    f(prim as usize)?;
                }
            } else {
                stack.push(node.right);
                stack.push(ni + 1);
            }
        }
        ControlFlow::Continue(())
    }
}

fn build_recursive(
    boxes: &[Aabb],
    centroids: &[Vec3],
    order: &mut [u32],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> u32 {
    let slice = &mut order[start..end];
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &i in slice.iter() {
        bounds = bounds.union(&boxes[i as usize]);
        cbounds.grow(&centroids[i as usize]);
    }
    let index = nodes.len() as u32;
    nodes.push(Node { bounds, start: start as u32, count: 0, right: 0 });

    let n = end - start;
    if n <= LEAF_SIZE {
        nodes[index as usize].count = n as u32;
        return index;
    }
    let ext = cbounds.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    if ext[axis] <= 0.0 {
        // All centroids coincide; a leaf is the only sensible split.
        nodes[index as usize].count = n as u32;
        return index;
    }
    let mid = n / 2;
    slice.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });
    build_recursive(boxes, centroids, order, start, start + mid, nodes);
    let right = build_recursive(boxes, centroids, order, start + mid, end, nodes);
    nodes[index as usize].right = right;
    index
}

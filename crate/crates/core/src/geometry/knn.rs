use kiddo::{ImmutableKdTree, SquaredEuclidean};

use super::Vec3;

/// Static k-nearest-neighbour index over a point cloud.
#[derive(Debug)]
pub struct PointIndex {
    tree: ImmutableKdTree<f64, 3>,
    len: usize,
}

impl PointIndex {
    pub fn new(points: &[Vec3]) -> Self {
        let raw: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        Self { tree: ImmutableKdTree::new_from_slice(&raw), len: points.len() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Up to `k` nearest points as (index, squared distance), nearest first,
    /// equal distances ordered by index.
    pub fn knn(&self, q: &Vec3, k: usize) -> Vec<(usize, f64)> {
        if self.len == 0 || k == 0 {
            return Vec::new();
        }
        let mut out: Vec<(usize, f64)> = self
            .tree
            .nearest_n::<SquaredEuclidean>(&[q.x, q.y, q.z], k.min(self.len))
            .into_iter()
            .map(|n| (n.item as usize, n.distance))
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }
}

use std::collections::BTreeSet;

use crate::geometry::{BoundaryMesh, PointIndex, Vec3};

use super::NnetError;

/// Sample points with standardized values and a symmetric kNN adjacency
/// restricted to segments inside Ω.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphBatch {
    pub points: Vec<Vec3>,
    /// Standardized values.
    pub values: Vec<f64>,
    pub value_mean: f64,
    pub value_std: f64,
    /// Per node: (neighbour, distance), ordered by (distance, neighbour position).
    pub neighbours: Vec<Vec<(usize, f64)>>,
    /// Longest retained edge; zero for an edgeless graph.
    pub e_max: f64,
    pub isolated: Vec<usize>,
}

impl GraphBatch {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn num_edges(&self) -> usize {
        self.neighbours.iter().map(Vec::len).sum()
    }

    /// Graph from explicit undirected edges, for tests and small instances.
    pub fn from_edges(points: Vec<Vec3>, values: &[f64], edges: &[(usize, usize)]) -> Self {
        let set: BTreeSet<(usize, usize)> = edges.iter().flat_map(|&(a, b)| [(a, b), (b, a)]).filter(|(a, b)| a != b).collect();
        Self::assemble(points, values, &set)
    }

    fn assemble(points: Vec<Vec3>, values: &[f64], edges: &BTreeSet<(usize, usize)>) -> Self {
        let n = points.len();
        let (value_mean, value_std) = standardization(values);
        let values = values.iter().map(|u| (u - value_mean) / value_std).collect();
        let mut neighbours = vec![Vec::new(); n];
        let mut e_max: f64 = 0.0;
        for &(i, j) in edges {
            let d = (points[i] - points[j]).norm();
            e_max = e_max.max(d);
            neighbours[i].push((j, d));
        }
        // Summation order must not depend on node numbering.
        for list in &mut neighbours {
            list.sort_by(|a, b| {
                let (pa, pb) = (points[a.0], points[b.0]);
                a.1.total_cmp(&b.1)
                    .then(pa.x.total_cmp(&pb.x))
                    .then(pa.y.total_cmp(&pb.y))
                    .then(pa.z.total_cmp(&pb.z))
            });
        }
        let isolated: Vec<usize> = (0..n).filter(|&i| neighbours[i].is_empty()).collect();
        Self { points, values, value_mean, value_std, neighbours, e_max, isolated }
    }
}

/// Mean and standard deviation; a constant input gets unit scale. Sums run
/// over sorted values so the result does not depend on node order.
pub fn standardization(values: &[f64]) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len().max(1) as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 1e-12 { std } else { 1.0 })
}

pub fn build_graph(points: &[Vec3], values: &[f64], mesh: &BoundaryMesh, k: usize) -> Result<GraphBatch, NnetError> {
    let n = points.len();
    if n < k + 1 {
        return Err(NnetError::TooFewPoints { n, k });
    }
    assert_eq!(values.len(), n, "one value per point");
    let index = PointIndex::new(points);
    let mut edges = BTreeSet::new();
    for (i, p) in points.iter().enumerate() {
        for (j, d2) in index.knn(p, k + 1) {
            if j == i || d2 == 0.0 {
                continue;
            }
            if mesh.segment_inside(p, &points[j]) {
                edges.insert((i, j));
                edges.insert((j, i));
            }
        }
    }
    let g = GraphBatch::assemble(points.to_vec(), values, &edges);
    if !g.isolated.is_empty() {
        log::warn!("{} of {n} graph nodes have no edge inside the domain", g.isolated.len());
    }
    Ok(g)
}

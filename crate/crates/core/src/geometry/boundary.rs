use std::collections::HashMap;
use std::ops::ControlFlow;

use super::predicates::{closest_point_on_triangle, ray_triangle, segment_hits_triangle};
use super::{Aabb, Bvh, GeometryError, Rng, Vec3, GEO_EPS_REL};

/// Ray directions for the parity test. Chosen off-axis so that axis-aligned
/// meshes rarely produce edge hits on the first cast.
const RAY_DIRECTIONS: [[f64; 3]; 4] = [
    [0.577_215_664_9, 0.316_227_766_0, 0.752_992_463_1],
    [-0.412_310_562_5, 0.836_660_026_5, 0.360_555_127_5],
    [0.223_606_797_7, -0.538_516_480_7, 0.812_403_840_5],
    [-0.707_106_781_2, -0.264_575_131_1, -0.655_743_852_4],
];

/// Trials per acceptance-rate window in interior sampling.
const REJECTION_WINDOW: u64 = 100_000;
const MIN_ACCEPTANCE: f64 = 1e-4;

/// Result of a closest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosestPoint {
    pub distance: f64,
    pub point: Vec3,
    pub triangle: usize,
}

/// Closed, consistently outward-oriented triangle surface with a BVH.
#[derive(Debug, Clone)]
pub struct BoundaryMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    bvh: Bvh,
    bbox: Aabb,
    eps: f64,
}

impl BoundaryMesh {
    /// Validates the surface (never repairs it) and builds the spatial index.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        if triangles.is_empty() {
            return Err(GeometryError::InvalidMesh("no triangles".into()));
        }
        let bbox = Aabb::from_points(&vertices);
        let diag = bbox.diagonal();
        if !(diag.is_finite() && diag > 0.0) {
            return Err(GeometryError::InvalidMesh("degenerate bounding box".into()));
        }
        let area_floor = 1e-14 * diag * diag;
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(GeometryError::InvalidMesh(format!("triangle {t} has an out-of-range vertex")));
            }
            let [a, b, c] = *tri;
            if a == b || b == c || a == c {
                return Err(GeometryError::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
            let area = 0.5 * (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a])).norm();
            if area <= area_floor {
                return Err(GeometryError::InvalidMesh(format!("triangle {t} is degenerate (area {area:.3e})")));
            }
            for (u, v) in [(a, b), (b, c), (c, a)] {
                if let Some(prev) = directed.insert((u, v), t) {
                    return Err(GeometryError::InvalidMesh(format!(
                        "directed edge ({u},{v}) used by triangles {prev} and {t}: non-manifold or inconsistent orientation"
                    )));
                }
            }
        }
        for &(u, v) in directed.keys() {
            if !directed.contains_key(&(v, u)) {
                return Err(GeometryError::InvalidMesh(format!("edge ({u},{v}) has a single incident triangle: surface is open")));
            }
        }
        let mesh = Self::build_unchecked(vertices, triangles, bbox);
        let vol = mesh.signed_volume();
        if vol <= 0.0 {
            return Err(GeometryError::InvalidMesh(format!("signed volume {vol:.3e} is not positive: orientation is inward")));
        }
        Ok(mesh)
    }

    fn build_unchecked(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>, bbox: Aabb) -> Self {
        let boxes: Vec<Aabb> = triangles
            .iter()
            .map(|t| Aabb::from_points(t.iter().map(|&i| &vertices[i])))
            .collect();
        let bvh = Bvh::build(&boxes);
        let eps = GEO_EPS_REL * bbox.diagonal();
        Self { vertices, triangles, bvh, bbox, eps }
    }

    /// Rebuilds the spatial index. Query answers do not change.
    pub fn rebuild_index(&mut self) {
        let boxes: Vec<Aabb> = self
            .triangles
            .iter()
            .map(|t| Aabb::from_points(t.iter().map(|&i| &self.vertices[i])))
            .collect();
        self.bvh = Bvh::build(&boxes);
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    pub fn diagonal(&self) -> f64 {
        self.bbox.diagonal()
    }

    /// Geometric tolerance `1e-9 * bbox diagonal`.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn triangle(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| self.vertices[a].dot(&self.vertices[b].cross(&self.vertices[c])) / 6.0)
            .sum()
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle(t);
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .sum()
    }

    /// Closest boundary point. Equidistant triangles resolve to the lowest
    /// triangle index.
    pub fn closest_point(&self, x: &Vec3) -> ClosestPoint {
        let (tri, d2) = self
            .bvh
            .closest(x, |t| {
                let [a, b, c] = self.triangle(t);
                (closest_point_on_triangle(x, &a, &b, &c) - x).norm_squared()
            })
            .expect("boundary mesh has triangles");
        let [a, b, c] = self.triangle(tri);
        ClosestPoint { distance: d2.sqrt(), point: closest_point_on_triangle(x, &a, &b, &c), triangle: tri }
    }

    pub fn distance_to_boundary(&self, x: &Vec3) -> (f64, Vec3) {
        let c = self.closest_point(x);
        (c.distance, c.point)
    }

    pub fn project_to_boundary(&self, x: &Vec3) -> Vec3 {
        self.closest_point(x).point
    }

    /// Ray-parity containment. A cast that grazes an edge or vertex (within
    /// the geometric tolerance) is discarded and re-cast in another direction.
    pub fn is_inside(&self, x: &Vec3) -> bool {
        if !self.bbox.inflate(self.eps).contains(x) {
            return false;
        }
        let reach = 2.0 * self.diagonal();
        let mut last = false;
        for d in RAY_DIRECTIONS {
            let dir = Vec3::new(d[0], d[1], d[2]).normalize();
            match self.ray_parity(x, &dir, reach) {
                Some(inside) => return inside,
                None => last = self.ray_parity_forced(x, &dir, reach),
            }
        }
        last
    }

    /// `Some(parity)` for a clean cast, `None` when a hit is ambiguous.
    fn ray_parity(&self, x: &Vec3, dir: &Vec3, reach: f64) -> Option<bool> {
        const BARY_TOL: f64 = 1e-9;
        let mut crossings = 0usize;
        let mut ambiguous = false;
        let _ = self.bvh.visit_ray(x, dir, reach, |t| {
            let [a, b, c] = self.triangle(t);
            let Some(hit) = ray_triangle(x, dir, &a, &b, &c) else {
                return ControlFlow::Continue(());
            };
            let bmin = hit.bary.iter().cloned().fold(f64::INFINITY, f64::min);
            if bmin < -BARY_TOL {
                return ControlFlow::Continue(());
            }
            if hit.t.abs() <= self.eps {
                ambiguous = true;
                return ControlFlow::Break(());
            }
            if hit.t < 0.0 {
                return ControlFlow::Continue(());
            }
            if bmin <= BARY_TOL || hit.cos_angle.abs() < 1e-9 {
                ambiguous = true;
                return ControlFlow::Break(());
            }
            crossings += 1;
            ControlFlow::Continue(())
        });
        (!ambiguous).then_some(crossings % 2 == 1)
    }

    fn ray_parity_forced(&self, x: &Vec3, dir: &Vec3, reach: f64) -> bool {
        let mut crossings = 0usize;
        let _ = self.bvh.visit_ray(x, dir, reach, |t| {
            let [a, b, c] = self.triangle(t);
            if let Some(hit) = ray_triangle(x, dir, &a, &b, &c) {
                if hit.t > 0.0 && hit.bary.iter().all(|&w| w >= 0.0) {
                    crossings += 1;
                }
            }
            ControlFlow::Continue(())
        });
        crossings % 2 == 1
    }

    /// Whether the straight segment `ab` stays inside the domain, i.e. touches
    /// no boundary triangle within the geometric tolerance.
    pub fn segment_inside(&self, a: &Vec3, b: &Vec3) -> bool {
        if a == b {
            return true;
        }
        let query = Aabb::from_points([a, b]).inflate(self.eps);
        let eps = self.eps;
        let hit = self.bvh.visit_overlapping(&query, |t| {
            let [p, q, r] = self.triangle(t);
            if segment_hits_triangle(a, b, &p, &q, &r, eps) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        hit.is_continue()
    }

    /// `n` points uniformly distributed in the domain by rejection from the
    /// bounding box.
    pub fn sample_interior(&self, n: usize, rng: &mut Rng) -> Result<Vec<Vec3>, GeometryError> {
        let mut out = Vec::with_capacity(n);
        let (lo, hi) = (self.bbox.min, self.bbox.max);
        let mut trials: u64 = 0;
        let mut window_accepts: u64 = 0;
        while out.len() < n {
            let p = Vec3::new(rng.range(lo.x, hi.x), rng.range(lo.y, hi.y), rng.range(lo.z, hi.z));
            trials += 1;
            if self.is_inside(&p) {
                out.push(p);
                window_accepts += 1;
            }
            if trials % REJECTION_WINDOW == 0 {
                let rate = window_accepts as f64 / REJECTION_WINDOW as f64;
                if rate < MIN_ACCEPTANCE {
                    return Err(GeometryError::RejectionBudgetExceeded { trials, rate });
                }
                window_accepts = 0;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::super::shapes;
    use super::*;

    #[test]
    fn cube_queries() {
        let cube = shapes::cube(1.0);
        let (d, _) = cube.distance_to_boundary(&Vec3::zeros());
        assert!((d - 0.5).abs() < 1e-15);
        let (d, _) = cube.distance_to_boundary(&Vec3::new(0.5, 0.5, 0.5));
        assert_eq!(d, 0.0);
        assert!(cube.is_inside(&Vec3::zeros()));
        assert!(!cube.is_inside(&Vec3::new(2.0, 0.0, 0.0)));
        assert!(cube.segment_inside(&Vec3::new(-0.4, 0.0, 0.0), &Vec3::new(0.4, 0.0, 0.0)));
        let p = Vec3::new(0.1, -0.2, 0.3);
        assert!(cube.segment_inside(&p, &p));
    }

    #[test]
    fn projection_tie_breaks_to_lowest_triangle() {
        let cube = shapes::cube(1.0);
        let c = cube.closest_point(&Vec3::zeros());
        let lowest = (0..cube.triangles().len())
            .find(|&t| {
                let [a, b, cc] = cube.triangle(t);
                ((closest_point_on_triangle(&Vec3::zeros(), &a, &b, &cc)).norm() - 0.5).abs() < 1e-15
            })
            .unwrap();
        assert_eq!(c.triangle, lowest);
        assert!((c.distance - 0.5).abs() < 1e-15);
        let on = Vec3::new(0.5, 0.1, -0.2);
        assert!((cube.project_to_boundary(&on) - on).norm() < 1e-15);
    }

    #[test]
    fn rejects_open_and_inverted_surfaces() {
        let cube = shapes::cube(1.0);
        let mut tris = cube.triangles().to_vec();
        tris.pop();
        assert!(BoundaryMesh::new(cube.vertices().to_vec(), tris).is_err());
        let flipped: Vec<[usize; 3]> = cube.triangles().iter().map(|&[a, b, c]| [a, c, b]).collect();
        let err = BoundaryMesh::new(cube.vertices().to_vec(), flipped).unwrap_err();
        assert!(err.to_string().contains("inward"));
    }

    #[test]
    fn sampling_is_deterministic_and_inside() {
        let cube = shapes::cube(1.0);
        let a = cube.sample_interior(100, &mut Rng::new(5)).unwrap();
        let b = cube.sample_interior(100, &mut Rng::new(5)).unwrap();
        assert_eq!(a.len(), 100);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| cube.is_inside(p)));
    }

    #[test]
    fn thin_domain_exhausts_rejection_budget() {
        // A long thin slab tilted across its own bounding box.
        let s = shapes::tilted_slab(1e-6);
        let err = s.sample_interior(10, &mut Rng::new(1)).unwrap_err();
        assert!(matches!(err, GeometryError::RejectionBudgetExceeded { .. }));
    }
}

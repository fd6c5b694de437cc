//! Point/ray/segment vs triangle primitives.

use super::Vec3;

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision
/// Detection, 5.1.5).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

/// Ray/triangle hit record from Möller–Trumbore.
#[derive(Debug, Clone, Copy)]
pub struct RayHit {
    pub t: f64,
    /// Barycentric coordinates of the hit (weights of a, b, c).
    pub bary: [f64; 3],
    /// Cosine between the ray and the triangle normal.
    pub cos_angle: f64,
}

/// Intersection of the line `origin + t * dir` with triangle `abc`, for any
/// `t`, `None` when parallel. Barycentrics are unclamped.
pub fn ray_triangle(origin: &Vec3, dir: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<RayHit> {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    let n = e1.cross(&e2);
    let nn = n.norm();
    if nn == 0.0 {
        return None;
    }
    let cos_angle = n.dot(dir) / (nn * dir.norm());
    if det == 0.0 || cos_angle.abs() < 1e-12 {
        return None;
    }
    let inv = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv;
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv;
    let t = e2.dot(&qvec) * inv;
    Some(RayHit { t, bary: [1.0 - u - v, u, v], cos_angle })
}

/// Whether segment `pq` touches triangle `abc` up to an absolute tolerance
/// `tol` (measured relative to the segment length along the segment and in
/// barycentric units scaled by triangle size).
pub fn segment_hits_triangle(p: &Vec3, q: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3, tol: f64) -> bool {
    let dir = q - p;
    let len = dir.norm();
    if len == 0.0 {
        return false;
    }
    let n = (b - a).cross(&(c - a));
    let nn = n.norm();
    if nn == 0.0 {
        return false;
    }
    let nhat = n / nn;
    let sp = nhat.dot(&(p - a));
    let sq = nhat.dot(&(q - a));
    if (sp > tol && sq > tol) || (sp < -tol && sq < -tol) {
        return false;
    }
    if (sp - sq).abs() <= f64::EPSILON * (sp.abs() + sq.abs()) {
        // Coplanar within tolerance: test against the closest point instead.
        let mid = (p + q) * 0.5;
        let cp = closest_point_on_triangle(&mid, a, b, c);
        return point_segment_distance(&cp, p, q) <= tol;
    }
    let t = (sp / (sp - sq)).clamp(0.0, 1.0);
    let x = p + dir * t;
    let cp = closest_point_on_triangle(&x, a, b, c);
    (cp - x).norm() <= tol
}

pub fn point_segment_distance(x: &Vec3, p: &Vec3, q: &Vec3) -> f64 {
    let d = q - p;
    let l2 = d.norm_squared();
    if l2 == 0.0 {
        return (x - p).norm();
    }
    let t = ((x - p).dot(&d) / l2).clamp(0.0, 1.0);
    (x - (p + d * t)).norm()
}

/// Signed solid angle subtended by triangle `abc` at `p` (Van Oosterom and
/// Strackee). Sums to 4π over a closed outward surface for interior points.
pub fn solid_angle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let ra = a - p;
    let rb = b - p;
    let rc = c - p;
    let la = ra.norm();
    let lb = rb.norm();
    let lc = rc.norm();
    let num = ra.dot(&rb.cross(&rc));
    let den = la * lb * lc + ra.dot(&rb) * lc + rb.dot(&rc) * la + rc.dot(&ra) * lb;
    2.0 * num.atan2(den)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_closest(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
        let mut best = f64::INFINITY;
        let n = 400;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let u = i as f64 / n as f64;
                let v = j as f64 / n as f64;
                let x = a + (b - a) * u + (c - a) * v;
                best = best.min((x - p).norm());
            }
        }
        best
    }

    #[test]
    fn closest_point_agrees_with_dense_sampling() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(0.2, 0.9, 0.1);
        for p in [
            Vec3::new(0.3, 0.3, 1.0),
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(2.0, 0.1, -0.3),
            Vec3::new(0.6, 0.8, 0.0),
            Vec3::new(0.1, 2.0, 0.5),
        ] {
            let d = (closest_point_on_triangle(&p, &a, &b, &c) - p).norm();
            let e = brute_closest(&p, &a, &b, &c);
            assert!(d <= e + 1e-12 && e - d < 5e-3, "{d} vs {e}");
        }
    }

    #[test]
    fn ray_hit_barycentrics() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(0.0, 1.0, 0.0);
        let hit = ray_triangle(&Vec3::new(0.25, 0.25, -1.0), &Vec3::z(), &a, &b, &c).unwrap();
        assert!((hit.t - 1.0).abs() < 1e-15);
        assert!((hit.bary[1] - 0.25).abs() < 1e-15 && (hit.bary[2] - 0.25).abs() < 1e-15);
        assert!(ray_triangle(&Vec3::zeros(), &Vec3::x(), &a, &b, &c).is_none());
    }

    #[test]
    fn segment_crossing_and_missing() {
        let a = Vec3::new(0.0, 0.0, 0.0);
        let b = Vec3::new(1.0, 0.0, 0.0);
        let c = Vec3::new(0.0, 1.0, 0.0);
        let p = Vec3::new(0.2, 0.2, -1.0);
        assert!(segment_hits_triangle(&p, &Vec3::new(0.2, 0.2, 1.0), &a, &b, &c, 1e-12));
        assert!(!segment_hits_triangle(&p, &Vec3::new(0.2, 0.2, -0.1), &a, &b, &c, 1e-12));
        assert!(!segment_hits_triangle(&p, &Vec3::new(2.0, 2.0, 1.0), &a, &b, &c, 1e-12));
    }
}

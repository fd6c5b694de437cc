//! Procedural test domains.

use std::collections::HashMap;

use super::{BoundaryMesh, Vec3};

/// Axis-aligned box; faces wound outward.
pub fn cuboid(min: Vec3, max: Vec3) -> BoundaryMesh {
    let v = |i: usize| {
        Vec3::new(
            if i & 1 == 0 { min.x } else { max.x },
            if i & 2 == 0 { min.y } else { max.y },
            if i & 4 == 0 { min.z } else { max.z },
        )
    };
    let vertices: Vec<Vec3> = (0..8).map(v).collect();
    let quads = [
        [0, 2, 3, 1], // z = min
        [4, 5, 7, 6], // z = max
        [0, 1, 5, 4], // y = min
        [2, 6, 7, 3], // y = max
        [0, 4, 6, 2], // x = min
        [1, 3, 7, 5], // x = max
    ];
    let mut tris = Vec::with_capacity(12);
    for [a, b, c, d] in quads {
        tris.push([a, b, c]);
        tris.push([a, c, d]);
    }
    BoundaryMesh::new(vertices, tris).expect("cuboid is a valid closed surface")
}

/// Cube of the given edge length centred at the origin.
pub fn cube(edge: f64) -> BoundaryMesh {
    let h = 0.5 * edge;
    cuboid(Vec3::repeat(-h), Vec3::repeat(h))
}

/// Subdivided icosahedron with vertices on the sphere of `radius`.
pub fn icosphere(radius: f64, subdivisions: usize) -> BoundaryMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|p| p * radius).collect();
    BoundaryMesh::new(verts, faces).expect("icosphere is a valid closed surface")
}

/// Torus around the z axis with tube centre radius `major` and tube radius
/// `minor`, `nu` segments around the axis and `nv` around the tube.
pub fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> BoundaryMesh {
    let mut verts = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let u = std::f64::consts::TAU * i as f64 / nu as f64;
        for j in 0..nv {
            let v = std::f64::consts::TAU * j as f64 / nv as f64;
            let r = major + minor * v.cos();
            verts.push(Vec3::new(r * u.cos(), r * u.sin(), minor * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut tris = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            tris.push([a, b, c]);
            tris.push([a, c, d]);
        }
    }
    BoundaryMesh::new(verts, tris).expect("torus is a valid closed surface")
}

/// Unit square slab of the given thickness rotated so that it cuts
/// diagonally through a much larger bounding box.
pub fn tilted_slab(thickness: f64) -> BoundaryMesh {
    let base = cuboid(Vec3::new(-0.5, -0.5 * thickness, -0.5), Vec3::new(0.5, 0.5 * thickness, 0.5));
    let rot = nalgebra::Rotation3::from_euler_angles(0.6, 0.4, 0.7);
    let verts = base.vertices().iter().map(|p| rot * p).collect();
    BoundaryMesh::new(verts, base.triangles().to_vec()).expect("rotation preserves validity")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volumes_are_close_to_analytic() {
        assert!((cube(2.0).signed_volume() - 8.0).abs() < 1e-12);
        let s = icosphere(1.0, 4);
        let v = 4.0 / 3.0 * std::f64::consts::PI;
        assert!((s.signed_volume() - v).abs() / v < 0.01);
        let t = torus(1.0, 0.3, 64, 32);
        let vt = 2.0 * std::f64::consts::PI.powi(2) * 1.0 * 0.09;
        assert!((t.signed_volume() - vt).abs() / vt < 0.02);
    }
}

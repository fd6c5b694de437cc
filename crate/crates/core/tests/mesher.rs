use std::sync::Arc;

use lamg_core::fem::{self, Norm, TetMesh, TET_EDGES};
use lamg_core::geometry::{shapes, BoundaryMesh, Rng, Vec3};
use lamg_core::mesher::{self, MesherConfig, MesherError, MesherOptions};
use lamg_core::sizing::{read_pos, SizingField};
use lamg_core::wos::{DirichletBC, Gaussian, PoissonProblem, SourceTerm};
use nalgebra::Matrix3;

fn grid_field(b: &BoundaryMesh, n: usize, s: impl Fn(&Vec3) -> f64) -> SizingField {
    let bb = b.bbox();
    let mut pts = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let t = Vec3::new(i as f64, j as f64, k as f64) / (n - 1) as f64;
                let p = bb.min + bb.extent().component_mul(&t);
                pts.push(p);
            }
        }
    }
    let sizes = pts.iter().map(&s).collect();
    SizingField::new(pts, sizes)
}

fn circumradius(p: &[Vec3; 4]) -> f64 {
    let a = Matrix3::from_rows(&[
        (p[1] - p[0]).transpose(),
        (p[2] - p[0]).transpose(),
        (p[3] - p[0]).transpose(),
    ]);
    let rhs = Vec3::new((p[1] - p[0]).norm_squared(), (p[2] - p[0]).norm_squared(), (p[3] - p[0]).norm_squared()) * 0.5;
    a.lu().solve(&rhs).unwrap().norm()
}

fn mean_edge(p: &[Vec3; 4]) -> f64 {
    TET_EDGES.iter().map(|&[i, j]| (p[i] - p[j]).norm()).sum::<f64>() / 6.0
}

/// Two-sided distance between the mesh boundary and the input surface,
/// sampled at vertices and face centroids.
fn hausdorff(m: &TetMesh, b: &BoundaryMesh) -> f64 {
    let surf = m.boundary_surface().unwrap();
    let samples = |s: &BoundaryMesh| -> Vec<Vec3> {
        let mut v = s.vertices().to_vec();
        v.extend((0..s.triangles().len()).map(|t| {
            let [a, b, c] = s.triangle(t);
            (a + b + c) / 3.0
        }));
        v
    };
    let d1 = samples(&surf).iter().map(|p| b.closest_point(p).distance).fold(0.0, f64::max);
    let d2 = samples(b).iter().map(|p| surf.closest_point(p).distance).fold(0.0, f64::max);
    d1.max(d2)
}

#[test]
fn cube_vertex_count_matches_lattice_prediction() {
    let b = shapes::cube(1.0);
    let m = mesher::mesh_uniform(&b, 0.25).unwrap();
    let predicted = (1.0f64 / 0.25 + 1.0).powi(3);
    let ratio = m.num_vertices() as f64 / predicted;
    assert!((0.5..=2.0).contains(&ratio), "{} vertices", m.num_vertices());
    assert!(m.volumes().iter().all(|&v| v > 0.0));
    assert!((m.total_volume() - 1.0).abs() < 1e-12);
}

#[test]
fn halving_size_grows_count_near_eightfold() {
    for (b, size) in [(shapes::cube(1.0), 0.25), (shapes::icosphere(1.0, 3), 0.2)] {
        let a = mesher::mesh_uniform(&b, size).unwrap().num_vertices();
        let c = mesher::mesh_uniform(&b, size / 2.0).unwrap().num_vertices();
        let g = c as f64 / a as f64;
        assert!((6.0..=10.0).contains(&g), "growth {g} ({a} -> {c})");
    }
}

#[test]
fn uniform_meshes_are_valid_and_close_to_the_surface() {
    let shapes = [
        ("cube", shapes::cube(1.0), 0.1),
        ("ball", shapes::icosphere(1.0, 3), 0.12),
        ("torus", shapes::torus(1.0, 0.35, 48, 24), 0.1),
    ];
    for (name, b, size) in shapes {
        let m = mesher::mesh_uniform(&b, size).unwrap();
        assert!(m.volumes().iter().all(|&v| v > 0.0), "{name}");
        // Only tets whose vertices all carry Dirichlet values may fall below the floor.
        for t in 0..m.num_tets() {
            let worst = fem::dihedral_angles(&m.corners(t)).into_iter().fold(f64::INFINITY, f64::min);
            if worst.to_degrees() < 5.0 - 1e-9 {
                assert!(m.tets()[t].iter().all(|&v| m.is_boundary(v)), "{name}: interior sliver {t}");
            }
        }
        let h = hausdorff(&m, &b);
        assert!(h <= size / 2.0, "{name}: hausdorff {h} > {}", size / 2.0);
        let rel = (m.total_volume() - b.signed_volume()).abs() / b.signed_volume();
        assert!(rel < 0.05, "{name}: volume off by {rel}");
    }
}

#[test]
fn constant_field_reduces_to_uniform() {
    let b = shapes::icosphere(1.0, 2);
    let field = grid_field(&b, 5, |_| 0.2);
    for eta in [1.0, 0.7] {
        let a = mesher::mesh_adaptive(&b, &field, eta).unwrap();
        let u = mesher::mesh_uniform(&b, 0.2 * eta).unwrap();
        assert_eq!(a, u);
    }
}

#[test]
fn fine_corner_is_denser() {
    let b = shapes::cube(1.0);
    let c0 = Vec3::repeat(-0.5);
    let field = grid_field(&b, 9, |p| 0.025 + 0.3 * (p - c0).norm());
    let m = mesher::mesh_adaptive(&b, &field, 1.0).unwrap();
    let near = m.vertices().iter().filter(|v| v.iter().all(|&x| x < 0.0)).count();
    let far = m.vertices().iter().filter(|v| v.iter().all(|&x| x > 0.0)).count();
    assert!(near >= 4 * far, "near {near} far {far}");
}

#[test]
fn smaller_eta_and_smaller_fields_give_more_vertices() {
    let b = shapes::icosphere(1.0, 3);
    let field = grid_field(&b, 7, |p| 0.1 + 0.1 * p.norm());
    let a = mesher::mesh_adaptive(&b, &field, 0.7).unwrap().num_vertices();
    let c = mesher::mesh_adaptive(&b, &field, 1.0).unwrap().num_vertices();
    assert!(a > c, "eta 0.7: {a}, eta 1.0: {c}");

    let mut last = 0;
    for s in [0.3, 0.25, 0.2, 0.15, 0.12, 0.1] {
        let n = mesher::mesh_adaptive(&b, &grid_field(&b, 4, |_| s), 1.0).unwrap().num_vertices();
        assert!(n >= last, "size {s}: {n} < {last}");
        last = n;
    }
}

#[test]
fn local_sizes_follow_the_field() {
    let cases = [
        (shapes::icosphere(1.0, 3), grid_field(&shapes::icosphere(1.0, 3), 9, |p| 0.07 + 0.1 * p.norm())),
        (shapes::cube(1.0), grid_field(&shapes::cube(1.0), 9, |p| 0.04 + 0.12 * (p.x + 0.5))),
    ];
    for (b, field) in cases {
        let eta = 0.9;
        let m = mesher::mesh_adaptive(&b, &field, eta).unwrap();
        let mut ratio = Vec::new();
        let mut within = 0;
        for t in 0..m.num_tets() {
            let p = m.corners(t);
            let want = eta * field.interpolate_size(&m.centroid(t));
            ratio.push(mean_edge(&p) / want);
            let circ = circumradius(&p) * 4.0 / 6f64.sqrt();
            if (0.4..=2.5).contains(&(circ / want)) {
                within += 1;
            }
        }
        ratio.sort_by(f64::total_cmp);
        let median = ratio[ratio.len() / 2];
        assert!((0.5..=1.6).contains(&median), "median {median}");
        let frac = within as f64 / m.num_tets() as f64;
        assert!(frac >= 0.9, "only {frac} of tets within range");
    }
}

#[test]
fn uniform_ball_mesh_solves_accurately() {
    let b = Arc::new(shapes::icosphere(1.0, 3));
    let (m, _) = mesher::mesh_uniform_with_vertices(&b, 10_000).unwrap();
    assert!((5_000..=20_000).contains(&m.num_vertices()), "{}", m.num_vertices());
    let prob = PoissonProblem::new(b.clone(), DirichletBC::from_fn(|p| p.norm_squared()), SourceTerm::constant(6.0));
    let sol = fem::solve_problem(Arc::new(m), &prob).unwrap();
    let probes = b.sample_interior(2000, &mut Rng::new(3)).unwrap();
    let re = fem::relative_error(&sol, |p| p.norm_squared(), &probes, Norm::L2).unwrap();
    assert!(re < 1e-2, "relative error {re}");
}

#[test]
fn vertex_target_search_lands_near_target() {
    let b = shapes::cube(1.0);
    let (m, size) = mesher::mesh_uniform_with_vertices(&b, 5500).unwrap();
    let r = m.num_vertices() as f64 / 5500.0;
    assert!((0.75..=1.33).contains(&r), "{} vertices at size {size}", m.num_vertices());
}

#[test]
fn meshing_is_deterministic() {
    let b = shapes::torus(1.0, 0.35, 32, 16);
    let field = grid_field(&b, 7, |p| 0.08 + 0.05 * (p.x + 1.5));
    let a = mesher::mesh_adaptive(&b, &field, 1.0).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = one.install(|| mesher::mesh_adaptive(&b, &field, 1.0).unwrap());
    assert_eq!(a, c);
    assert_eq!(a.vertices(), c.vertices());
}

#[test]
fn discrete_maximum_principle_on_the_cube_lattice() {
    let b = Arc::new(shapes::cube(1.0));
    let m = Arc::new(mesher::mesh_uniform(&b, 0.08).unwrap());
    let g = vec![
        Gaussian { center: Vec3::new(0.5, 0.1, 0.0), amplitude: 1.0, width: 0.2 },
        Gaussian { center: Vec3::new(-0.5, -0.3, 0.2), amplitude: -0.7, width: 0.3 },
    ];
    let prob = PoissonProblem::new(b.clone(), DirichletBC::Gaussians(g), SourceTerm::zero());
    let sol = fem::solve_problem(m.clone(), &prob).unwrap();
    let bvals: Vec<f64> = (0..m.num_vertices()).filter(|&v| m.is_boundary(v)).map(|v| sol.values[v]).collect();
    let (lo, hi) = bvals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), &x| (a.min(x), c.max(x)));
    for &u in &sol.values {
        assert!(u >= lo - 1e-9 && u <= hi + 1e-9, "{u} outside [{lo}, {hi}]");
    }
}

#[test]
fn background_field_export() {
    let b = shapes::cube(1.0);
    let field = grid_field(&b, 3, |_| 0.3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bg.pos");
    mesher::export_background_field(&field, 0.7, &path).unwrap();
    let back = read_pos(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(back.len(), field.len());
    assert!(back.sizes.iter().all(|&s| (s - 0.21).abs() < 1e-9));
}

#[test]
fn rejects_bad_requests() {
    let b = shapes::cube(1.0);
    let diag = b.diagonal();
    assert!(matches!(mesher::mesh_uniform(&b, diag / 3.0), Err(MesherError::InvalidConfig(_))));
    let fine = grid_field(&b, 3, |_| 1e-4 * diag);
    assert!(matches!(mesher::mesh_adaptive(&b, &fine, 1.0), Err(MesherError::FieldTooFine { .. })));
    let mut cfg = MesherConfig::uniform(0.2);
    cfg.options = MesherOptions { gradation: 0.5, ..MesherOptions::default() };
    assert!(matches!(mesher::generate(&b, &cfg), Err(MesherError::InvalidConfig(_))));
}

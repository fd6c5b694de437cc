use std::sync::Arc;

use lamg_core::amr::{self, amr_loop, amr_loop_with_oracle, refine, AmrConfig};
use lamg_core::fem::{self, Norm, TetMesh};
use lamg_core::geometry::{shapes, Rng, Vec3};
use lamg_core::mesher;
use lamg_core::sizing::reference_field;
use lamg_core::wos::{DirichletBC, PoissonProblem, SourceTerm};

fn corner_problem() -> (PoissonProblem, impl Fn(&Vec3) -> f64 + Sync + Copy) {
    let x0 = Vec3::repeat(-0.55);
    let u = move |p: &Vec3| 1.0 / (p - x0).norm();
    let prob = PoissonProblem::new(Arc::new(shapes::cube(1.0)), DirichletBC::from_fn(u), SourceTerm::zero());
    (prob, u)
}

fn octant_counts(m: &TetMesh) -> (usize, usize) {
    let near = m.vertices().iter().filter(|v| v.iter().all(|&x| x < 0.0)).count();
    let far = m.vertices().iter().filter(|v| v.iter().all(|&x| x > 0.0)).count();
    (near, far)
}

#[test]
fn corner_concentrated_error_refines_that_corner() {
    let mut m = TetMesh::structured_box(Vec3::repeat(-0.5), Vec3::repeat(0.5), [4, 4, 4]);
    let c = Vec3::repeat(-0.5);
    for _ in 0..10 {
        let e: Vec<f64> = (0..m.num_tets()).map(|t| 1.0 / ((m.centroid(t) - c).norm() + 0.02)).collect();
        m = refine(&m, &e, 0.7).unwrap();
    }
    let (near, far) = octant_counts(&m);
    assert!(near >= 4 * far, "near {near} far {far}");
}

#[test]
fn indicator_tracks_local_mesh_size() {
    let b = shapes::cube(1.0);
    let pts: Vec<Vec3> = (0..125)
        .map(|i| Vec3::new((i % 5) as f64, ((i / 5) % 5) as f64, (i / 25) as f64) / 4.0 - Vec3::repeat(0.5))
        .collect();
    let sizes = pts.iter().map(|p| if p.x < 0.0 { 0.05 } else { 0.1 }).collect();
    let field = lamg_core::sizing::SizingField::new(pts, sizes);
    let m = Arc::new(mesher::mesh_adaptive(&b, &field, 1.0).unwrap());
    let prob = PoissonProblem::new(Arc::new(b), DirichletBC::from_fn(|p| p.norm_squared()), SourceTerm::constant(6.0));
    let sol = fem::solve_problem(m.clone(), &prob).unwrap();
    let eta = amr::zz_error(&m, &sol);
    assert!(eta.iter().all(|&e| e >= 0.0));
    let mean = |pred: &dyn Fn(&Vec3) -> bool| {
        let sel: Vec<f64> = (0..m.num_tets()).filter(|&t| pred(&m.centroid(t))).map(|t| eta[t]).collect();
        sel.iter().sum::<f64>() / sel.len() as f64
    };
    let fine = mean(&|c| c.x < -0.2 && c.iter().all(|x| x.abs() < 0.4));
    let coarse = mean(&|c| c.x > 0.2 && c.iter().all(|x| x.abs() < 0.4));
    assert!(coarse > fine, "coarse {coarse} fine {fine}");
}

#[test]
fn total_indicator_decreases_under_uniform_refinement() {
    let mut last = f64::INFINITY;
    for n in [4, 8, 16] {
        let m = Arc::new(TetMesh::structured_box(Vec3::zeros(), Vec3::repeat(1.0), [n, n, n]));
        let prob = PoissonProblem::new(
            Arc::new(shapes::cuboid(Vec3::zeros(), Vec3::repeat(1.0))),
            DirichletBC::from_fn(|p| p.norm_squared()),
            SourceTerm::constant(6.0),
        );
        let sol = fem::solve_problem(m.clone(), &prob).unwrap();
        let total = amr::zz_error(&m, &sol).iter().map(|e| e * e).sum::<f64>().sqrt();
        assert!(total < last, "n={n}: {total} >= {last}");
        last = total;
    }
}

#[test]
fn loop_grows_vertices_and_beats_uniform_on_corner_singularity() {
    let (prob, u) = corner_problem();
    let (coarse, _) = mesher::mesh_uniform_with_vertices(&prob.mesh, 1000).unwrap();
    let cfg = AmrConfig { vertex_budget: 8000, ..AmrConfig::default() };
    let out = amr_loop_with_oracle(&prob, Arc::new(coarse), &cfg, Some(&u)).unwrap();
    let rows = &out.telemetry;
    assert!(rows.windows(2).all(|w| w[1].vertices > w[0].vertices));
    assert!(out.mesh.num_vertices() >= cfg.vertex_budget);
    assert_eq!(rows.last().unwrap().vertices, out.mesh.num_vertices());
    assert!(rows.iter().all(|r| r.relative_error.is_some()));

    let probes = prob.mesh.sample_interior(3000, &mut Rng::new(5)).unwrap();
    let re_amr = fem::relative_error(&out.solution, u, &probes, Norm::L2).unwrap();
    let (um, _) = mesher::mesh_uniform_with_vertices(&prob.mesh, out.mesh.num_vertices()).unwrap();
    assert!(um.num_vertices() as f64 >= 0.8 * out.mesh.num_vertices() as f64);
    let su = fem::solve_problem(Arc::new(um), &prob).unwrap();
    let re_uni = fem::relative_error(&su, u, &probes, Norm::L2).unwrap();
    assert!(re_amr <= 0.8 * re_uni, "amr {re_amr} uniform {re_uni}");

    // Reference sizes are smaller where AMR refined.
    let pts = prob.mesh.sample_interior(2000, &mut Rng::new(6)).unwrap();
    let (field, skipped) = reference_field(&out.mesh, &pts);
    assert!(skipped.len() < 20);
    let octant_mean = |sign: f64| {
        let s: Vec<f64> = (0..field.len()).filter(|&i| field.points[i].iter().all(|&x| x * sign > 0.0)).map(|i| field.size(i)).collect();
        s.iter().sum::<f64>() / s.len() as f64
    };
    assert!(octant_mean(-1.0) < octant_mean(1.0));
}

#[test]
fn iteration_cap_stops_the_loop() {
    let (prob, _) = corner_problem();
    let coarse = Arc::new(TetMesh::structured_box(Vec3::repeat(-0.5), Vec3::repeat(0.5), [3, 3, 3]));
    let cfg = AmrConfig { vertex_budget: usize::MAX, max_iterations: 3, ..AmrConfig::default() };
    let out = amr_loop(&prob, coarse, &cfg).unwrap();
    assert_eq!(out.telemetry.len(), 4);
    assert_eq!(out.solves, 4);
}

#[test]
fn telemetry_csv() {
    let (prob, _) = corner_problem();
    let coarse = Arc::new(TetMesh::structured_box(Vec3::repeat(-0.5), Vec3::repeat(0.5), [3, 3, 3]));
    let out = amr_loop(&prob, coarse, &AmrConfig { vertex_budget: 300, ..AmrConfig::default() }).unwrap();
    let mut buf = Vec::new();
    amr::write_telemetry(&out.telemetry, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,vertices,tets,max_error,mean_error,marked,cg_iterations,relative_error"
    );
    assert_eq!(lines.count(), out.telemetry.len());
}

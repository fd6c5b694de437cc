//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails. Criterion numbers given as arguments restrict
//! the run to those criteria.

use std::collections::BTreeMap;
use std::error::Error;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use lamg_core::amr::{amr_loop, AmrConfig};
use lamg_core::fem::{self, Norm};
use lamg_core::geometry::{shapes, Rng, Vec3};
use lamg_core::mesher;
use lamg_core::nnet::{
    build_graph, gradients, loss, loss_with_grad, weight_low, GraphBatch, NetConfig, NetParams, TrainConfig,
};
use lamg_core::sizing::size_from_volume;
use lamg_core::wos::{estimate, estimate_full, DirichletBC, PoissonProblem, SourceTerm, WosConfig};
use lamg_pipeline::config::{ExperimentConfig, ModelPreset, Span};
use lamg_pipeline::dataset::{gen_dataset, load_corpus, ProblemRecord, Shape};
use lamg_pipeline::evaluate::{evaluate, median, Bench, Reference};
use lamg_pipeline::experiment::{held_out, run_jobs, uniform_sizes, Job};
use lamg_pipeline::methods::{run_amr, run_lamg, train_model, Case, Model, RunRecord};
use lamg_pipeline::report::{strip_timings, write_runs};

type Check = Result<(bool, String), Box<dyn Error>>;

fn max_linear_error(mesh: fem::TetMesh, a: Vec3, b: f64) -> Result<f64, Box<dyn Error>> {
    let prob = PoissonProblem::new(Arc::new(shapes::cube(1.0)), DirichletBC::from_fn(move |p| a.dot(p) + b), SourceTerm::zero());
    let sol = fem::solve_problem(Arc::new(mesh), &prob)?;
    let scale = sol.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(sol.mesh.vertices().iter().zip(&sol.values).map(|(p, u)| (u - (a.dot(p) + b)).abs() / scale).fold(0.0, f64::max))
}

fn fem_exactness() -> Check {
    let cube = shapes::cube(1.0);
    let (mesh, _) = mesher::mesh_uniform_with_vertices(&cube, 10_000)?;
    let verts = mesh.num_vertices();
    let mut rng = Rng::new(101);
    let (mut worst, mut slowest): (f64, f64) = (0.0, 0.0);
    for _ in 0..8 {
        let a = Vec3::new(rng.range(-3.0, 3.0), rng.range(-3.0, 3.0), rng.range(-3.0, 3.0));
        let b = rng.range(-2.0, 2.0);
        let t = Instant::now();
        worst = worst.max(max_linear_error(mesh.clone(), a, b)?);
        slowest = slowest.max(t.elapsed().as_secs_f64());
    }
    Ok((
        verts >= 9_000 && worst <= 1e-10 && slowest < 5.0,
        format!("{verts} vertices, max relative vertex error {worst:.2e}, slowest solve {slowest:.2} s"),
    ))
}

fn ball_problem() -> PoissonProblem {
    PoissonProblem::new(Arc::new(shapes::icosphere(1.0, 3)), DirichletBC::from_fn(|p| p.norm_squared()), SourceTerm::constant(6.0))
}

fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    points.iter().map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / points.iter().map(|(x, _)| (x - mx).powi(2)).sum::<f64>()
}

fn wos_correctness() -> Check {
    let prob = ball_problem();
    let cfg = WosConfig { shell_eps: 1e-6, ..WosConfig::for_mesh(&prob.mesh, 5000) };
    let pts = prob.mesh.sample_interior(20, &mut Rng::new(201))?;
    let root = Rng::new(202);
    let hits = pts
        .iter()
        .enumerate()
        .filter(|(i, x)| {
            let e = estimate_full(&prob, x, &cfg, &mut root.substream(*i as u64));
            (e.mean - x.norm_squared()).abs() <= 3.0 * e.std_error()
        })
        .count();

    let x = Vec3::new(0.3, 0.2, -0.1);
    let reps = 200;
    let root = Rng::new(203);
    let logs: Vec<(f64, f64)> = [50usize, 100, 200, 400, 800]
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let cfg = WosConfig { m, ..cfg };
            let means: Vec<f64> = (0..reps).map(|r| estimate(&prob, &x, &cfg, &mut root.substream((j * reps + r) as u64)).0).collect();
            let mu = means.iter().sum::<f64>() / reps as f64;
            let var = means.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (reps - 1) as f64;
            ((m as f64).ln(), var.ln())
        })
        .collect();
    let slope = log_log_slope(&logs);
    Ok((
        hits >= 18 && (-1.15..=-0.85).contains(&slope),
        format!("{hits}/20 points within 3 sigma, variance slope {slope:.3}"),
    ))
}

fn sizing_inversion() -> Check {
    let errs: Vec<f64> = [0.1, 1.0, 10.0].iter().map(|&a: &f64| (size_from_volume(a.powi(3) / (6.0 * 2f64.sqrt())) - a).abs()).collect();
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    Ok((worst <= 1e-12, format!("max |s - a| = {worst:.2e}")))
}

fn flat_loss(p: &NetParams, g: &GraphBatch, target: &[f64], cfg: &TrainConfig) -> f64 {
    loss(&p.forward(g).expect("forward"), target, cfg).total
}

/// Compares analytic parameter gradients with a fourth-order central
/// difference. Components whose stencil straddles a ReLU or |.| kink (there
/// the derivative does not exist) are detected from the spread of second
/// differences and counted separately. Returns (checked, bad, kinks, worst).
fn parameter_gradient_check(p: &NetParams, g: &GraphBatch, target: &[f64], cfg: &TrainConfig) -> (usize, usize, usize, f64) {
    let (parts, grad) = gradients(p, g, target, cfg).expect("gradients");
    let x0 = p.flat();
    let mut q = p.clone();
    let h = 1e-5;
    let noise = 64.0 * f64::EPSILON * parts.total.abs().max(1.0) / h;
    let mut eval = |i: usize, t: f64| {
        let mut x = x0.clone();
        x[i] += t;
        q.set_flat(&x);
        flat_loss(&q, g, target, cfg)
    };
    let (mut checked, mut bad, mut kinks, mut worst): (usize, usize, usize, f64) = (0, 0, 0, 0.0);
    for i in 0..x0.len() {
        let f0 = parts.total;
        let (f1, fm1, f2, fm2) = (eval(i, h), eval(i, -h), eval(i, 2.0 * h), eval(i, -2.0 * h));
        let fd = (8.0 * (f1 - fm1) - (f2 - fm2)) / (12.0 * h);
        let d2 = [f2 - 2.0 * f1 + f0, f1 - 2.0 * f0 + fm1, f0 - 2.0 * fm1 + fm2];
        let spread = d2.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - d2.iter().cloned().fold(f64::INFINITY, f64::min);
        let scale = fd.abs().max(grad[i].abs());
        if spread > h * (1e-6 * scale + 4.0 * noise) {
            kinks += 1;
            continue;
        }
        checked += 1;
        let err = ((fd - grad[i]).abs() - noise).max(0.0);
        let rel = err / scale.max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
        if rel > 1e-5 {
            bad += 1;
        }
    }
    (checked, bad, kinks, worst)
}

fn loss_fidelity() -> Check {
    let cfg = TrainConfig::default();
    let zero = loss(&[0.3, 0.1, 0.7], &[0.3, 0.1, 0.7], &cfg).total;
    let l1 = loss(&[0.6], &[0.1], &cfg).l1;
    let w = weight_low(cfg.s_lo, &cfg);
    let mut ok = zero == 0.0 && (l1 - 0.125).abs() < 1e-15 && w == 0.5;

    let mesh = shapes::cube(1.0);
    let (mut pred_worst, mut param_worst): (f64, f64) = (0.0, 0.0);
    let (mut checked, mut bad, mut kinks) = (0, 0, 0);
    for inst in 0..20u64 {
        let mut rng = Rng::new(400 + inst);
        let pts = mesh.sample_interior(10, &mut rng)?;
        let vals: Vec<f64> = (0..10).map(|_| rng.normal()).collect();
        let target: Vec<f64> = (0..10).map(|_| rng.uniform()).collect();
        let pred: Vec<f64> = (0..10).map(|_| rng.range(-0.1, 1.1)).collect();

        // Loss gradient with respect to the predictions.
        let (_, g) = loss_with_grad(&pred, &target, &cfg);
        for i in 0..10 {
            let h = 1e-6;
            let mut a = pred.clone();
            let mut b = pred.clone();
            a[i] += h;
            b[i] -= h;
            let fd = (loss(&a, &target, &cfg).total - loss(&b, &target, &cfg).total) / (2.0 * h);
            let noise = 64.0 * f64::EPSILON / h;
            let rel = ((fd - g[i]).abs() - noise).max(0.0) / fd.abs().max(g[i].abs()).max(f64::MIN_POSITIVE);
            pred_worst = pred_worst.max(rel);
        }

        // Full network parameter gradients.
        let graph = build_graph(&pts, &vals, &mesh, 4)?;
        let mut p = NetParams::init(NetConfig::small(), &mut rng);
        for l in &mut p.layers {
            for b in l.b.iter_mut() {
                *b = rng.range(-0.1, 0.1);
            }
        }
        let (c, b, k, w) = parameter_gradient_check(&p, &graph, &target, &cfg);
        checked += c;
        bad += b;
        kinks += k;
        param_worst = param_worst.max(w);
    }
    ok &= pred_worst <= 1e-5 && bad == 0 && kinks * 2 <= checked + kinks;
    Ok((
        ok,
        format!(
            "L(ref,ref) = {zero}, L1 = {l1}, w_low(s_lo) = {w}; 20 instances: relative error beyond the rounding floor: loss gradient {pred_worst:.1e}, parameter gradient {param_worst:.1e} over {checked} components ({bad} bad, {kinks} at kinks)"
        ),
    ))
}

fn amr_effectiveness() -> Check {
    let x0 = Vec3::repeat(-0.55);
    let u = move |p: &Vec3| 1.0 / (p - x0).norm();
    let prob = PoissonProblem::new(Arc::new(shapes::cube(1.0)), DirichletBC::from_fn(u), SourceTerm::zero());
    let (coarse, _) = mesher::mesh_uniform_with_vertices(&prob.mesh, 1000)?;
    let cfg = AmrConfig { vertex_budget: 8000, ..AmrConfig::default() };
    let out = amr_loop(&prob, Arc::new(coarse), &cfg)?;
    let probes = prob.mesh.sample_interior(4096, &mut Rng::new(501))?;
    let re_amr = fem::relative_error(&out.solution, u, &probes, Norm::L2)?;
    let (um, _) = mesher::mesh_uniform_with_vertices(&prob.mesh, out.mesh.num_vertices())?;
    let uv = um.num_vertices();
    let su = fem::solve_problem(Arc::new(um), &prob)?;
    let re_uni = fem::relative_error(&su, u, &probes, Norm::L2)?;
    Ok((
        re_amr <= 0.8 * re_uni && uv <= out.mesh.num_vertices() * 5 / 4,
        format!("AMR {} vertices RE {re_amr:.3e}; uniform {uv} vertices RE {re_uni:.3e}; ratio {:.3}", out.mesh.num_vertices(), re_amr / re_uni),
    ))
}

struct Held {
    record: ProblemRecord,
    problem: PoissonProblem,
    reference: Reference,
}

/// Trained cube model plus held-out problems with their references.
struct Study {
    cfg: ExperimentConfig,
    bench: Bench,
    model: Model,
    held: Vec<Held>,
    summary: String,
}

impl Study {
    fn build() -> Result<Self, Box<dyn Error>> {
        let mut cfg = ExperimentConfig::default();
        cfg.model.preset = ModelPreset::Small;
        cfg.validate()?;
        let t = Instant::now();
        let dir = tempfile::tempdir()?;
        let shape = Shape::new("cube", cfg.dataset.coarse_vertices)?;
        let manifest = gen_dataset(std::slice::from_ref(&shape), &cfg.dataset, cfg.seeds.dataset, dir.path())?;
        let corpus = load_corpus(dir.path())?;
        let gen_s = t.elapsed().as_secs_f64();
        let t = Instant::now();
        let (model, outcome) = train_model(&corpus, std::slice::from_ref(&shape), &cfg, cfg.seeds.training)?;
        let train_s = t.elapsed().as_secs_f64();
        let bench = Bench::new(shape, cfg.evaluation.probes, cfg.evaluation.reference_vertices, cfg.seeds.probes)?;
        let held = held_out(&cfg, &bench, cfg.seeds.evaluation, cfg.evaluation.problems)?
            .into_iter()
            .map(|record| {
                let problem = record.problem(bench.shape.boundary.clone());
                let reference = bench.reference(&problem)?;
                Ok(Held { record, problem, reference })
            })
            .collect::<Result<Vec<_>, Box<dyn Error>>>()?;
        let last = outcome.curve.last().map_or(f64::NAN, |e| e.train_loss);
        let summary = format!(
            "corpus {} problems ({} failed, {gen_s:.0} s), {} learnables, loss {:.4} -> {last:.4} ({train_s:.0} s), reference {} vertices",
            corpus.len(),
            manifest.failed.len(),
            model.params.count(),
            outcome.initial_loss,
            bench.reference_mesh.num_vertices()
        );
        Ok(Self { cfg, bench, model, held, summary })
    }

    fn case<'a>(&'a self, h: &'a Held) -> Case<'a> {
        Case { shape: &self.bench.shape, problem: &h.problem, index: h.record.index, rng: h.record.rng(), probes: &self.bench.probes }
    }

    fn lamg(&self, h: &Held, n: usize, m: usize, eta: f64) -> Result<RunRecord, Box<dyn Error>> {
        let mut run = run_lamg(&self.case(h), &self.model, n, m, eta)?;
        evaluate(&mut run, &h.reference)?;
        Ok(run.record)
    }

    fn amr(&self, h: &Held) -> Result<RunRecord, Box<dyn Error>> {
        let mut run = run_amr(&self.case(h), &self.cfg.baseline.amr)?;
        evaluate(&mut run, &h.reference)?;
        Ok(run.record)
    }
}

fn column(records: &[RunRecord], f: fn(&RunRecord) -> f64) -> Vec<f64> {
    records.iter().map(f).collect()
}

fn end_to_end(study: &Study) -> Check {
    let (mut lamg, mut amr) = (Vec::new(), Vec::new());
    for h in &study.held {
        lamg.push(study.lamg(h, study.cfg.run.n, study.cfg.run.m, study.cfg.run.eta)?);
        amr.push(study.amr(h)?);
    }
    let re = (median(&column(&lamg, |r| r.re_l2)), median(&column(&amr, |r| r.re_l2)));
    let time = (median(&column(&lamg, |r| r.total_s)), median(&column(&amr, |r| r.total_s)));
    let verts = (median(&column(&lamg, |r| r.vertices as f64)), median(&column(&amr, |r| r.vertices as f64)));
    let ok = study.model.params.count() == 1393 && study.held.len() == 20 && re.0 <= 1.5 * re.1 && time.0 <= 0.67 * time.1;
    Ok((
        ok,
        format!(
            "{}; median RE lamg {:.3e} amr {:.3e} (ratio {:.3}); median time lamg {:.3} s amr {:.3} s (ratio {:.3}); median vertices lamg {} amr {}",
            study.summary,
            re.0,
            re.1,
            re.0 / re.1,
            time.0,
            time.1,
            time.0 / time.1,
            verts.0,
            verts.1
        ),
    ))
}

fn eta_tradeoff(study: &Study) -> Check {
    let etas = [0.7, 0.85, 1.0, 1.2];
    let mut verts_ok = true;
    let mut res: Vec<Vec<f64>> = vec![Vec::new(); etas.len()];
    let mut verts: Vec<Vec<usize>> = Vec::new();
    for h in study.held.iter().take(5) {
        let row: Vec<RunRecord> = etas.iter().map(|&e| study.lamg(h, study.cfg.run.n, study.cfg.run.m, e)).collect::<Result<_, _>>()?;
        verts_ok &= row.windows(2).all(|w| w[1].vertices <= w[0].vertices);
        for (j, r) in row.iter().enumerate() {
            res[j].push(r.re_l2);
        }
        verts.push(row.iter().map(|r| r.vertices).collect());
    }
    let med: Vec<f64> = res.iter().map(|v| median(v)).collect();
    let re_ok = med.windows(2).all(|w| w[1] >= w[0]);
    Ok((verts_ok && re_ok, format!("eta {etas:?}: vertices per problem {verts:?}; median RE {:?}", med.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>())))
}

fn robustness(study: &Study) -> Check {
    let held = &study.held;
    let eta = study.cfg.run.eta;
    let mut by_m = BTreeMap::new();
    for m in [50usize, 500, 2000] {
        let re: Vec<f64> = held.iter().map(|h| Ok(study.lamg(h, 500, m, eta)?.re_l2)).collect::<Result<_, Box<dyn Error>>>()?;
        by_m.insert(m, median(&re));
    }
    let lo = by_m.values().cloned().fold(f64::INFINITY, f64::min);
    let hi = by_m.values().cloned().fold(0.0, f64::max);
    let m_spread = hi / lo - 1.0;

    let mut by_n: BTreeMap<usize, Vec<RunRecord>> = BTreeMap::new();
    for n in [50usize, 500, 3000] {
        by_n.insert(n, held.iter().map(|h| study.lamg(h, n, study.cfg.run.m, eta)).collect::<Result<_, _>>()?);
    }
    let base = &by_n[&500];
    let worst_ratio = [50usize, 3000]
        .iter()
        .flat_map(|n| by_n[n].iter().zip(base).map(|(r, b)| r.re_l2 / b.re_l2))
        .fold(0.0, f64::max);
    let v = |n: usize| median(&column(&by_n[&n], |r| r.vertices as f64));
    let ok = m_spread < 0.5 && worst_ratio <= 2.0 && v(50) > v(3000);
    Ok((
        ok,
        format!(
            "median RE by m {:?} (spread {:.1}%); worst RE(n)/RE(500) {worst_ratio:.3}; median vertices n=50 {} n=500 {} n=3000 {}",
            by_m.iter().map(|(m, r)| format!("{m}: {r:.3e}")).collect::<Vec<_>>(),
            100.0 * m_spread,
            v(50),
            v(500),
            v(3000)
        ),
    ))
}

fn graph_construction() -> Check {
    let mesh = shapes::torus(1.0, 0.3, 48, 24);
    let mut rng = Rng::new(901);
    let mut pts = Vec::new();
    for (centre, count) in [(Vec3::new(1.0, 0.0, 0.0), 10), (Vec3::new(-1.0, 0.0, 0.0), 10)] {
        for _ in 0..count {
            pts.push(centre + rng.unit_vector() * rng.range(0.0, 0.1));
        }
    }
    let vals: Vec<f64> = pts.iter().map(|p| p.x).collect();
    let g = build_graph(&pts, &vals, &mesh, 12)?;
    let crossing = (0..pts.len()).flat_map(|i| g.neighbours[i].iter().map(move |&(j, _)| (i, j))).filter(|&(i, j)| (i < 10) != (j < 10)).count();
    let hidden = (0..pts.len()).flat_map(|i| g.neighbours[i].iter().map(move |&(j, _)| (i, j))).filter(|&(i, j)| !mesh.segment_inside(&pts[i], &pts[j])).count();

    let cube = shapes::cube(1.0);
    let pts = cube.sample_interior(80, &mut Rng::new(902))?;
    let vals: Vec<f64> = pts.iter().map(|p| (3.0 * p.x).sin() + p.y * p.z).collect();
    let p = NetParams::init(NetConfig::small(), &mut Rng::new(903));
    let out = p.forward(&build_graph(&pts, &vals, &cube, 8)?)?;
    let mut keyed: Vec<(f64, usize)> = {
        let mut r = Rng::new(904);
        (0..pts.len()).map(|i| (r.uniform(), i)).collect()
    };
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
    let perm: Vec<usize> = keyed.into_iter().map(|(_, i)| i).collect();
    let pp: Vec<Vec3> = perm.iter().map(|&i| pts[i]).collect();
    let vp: Vec<f64> = perm.iter().map(|&i| vals[i]).collect();
    let outp = p.forward(&build_graph(&pp, &vp, &cube, 8)?)?;
    let mismatched = perm.iter().enumerate().filter(|&(a, &i)| outp[a] != out[i]).count();
    Ok((
        crossing == 0 && hidden == 0 && mismatched == 0,
        format!("{} torus edges, {crossing} cross the hole, {hidden} leave the domain; {mismatched}/80 outputs differ after permutation", g.num_edges()),
    ))
}

/// Small experiment through every stage; returns the corpus files and the
/// runs CSV.
fn small_experiment(dir: &Path) -> Result<(BTreeMap<String, Vec<u8>>, String), Box<dyn Error>> {
    let mut cfg = ExperimentConfig::default();
    cfg.dataset.problems = 3;
    cfg.dataset.n = Span::new(80, 120);
    cfg.dataset.m = Span::new(20, 40);
    cfg.dataset.coarse_vertices = 800;
    cfg.dataset.amr.vertex_budget = 2000;
    cfg.train.epochs = 5;
    cfg.run = lamg_pipeline::config::RunConfig { n: 100, m: 20, eta: 1.0 };
    cfg.baseline.amr.vertex_budget = 1500;
    cfg.baseline.amg_points = 100;
    cfg.baseline.wos_points = 50;
    cfg.baseline.wos_m = 40;
    cfg.baseline.uniform_vertices = vec![500, 1500];
    cfg.evaluation = lamg_pipeline::config::EvaluationConfig { reference_vertices: 4000, probes: 256, problems: 2 };
    let shape = Shape::new("cube", cfg.dataset.coarse_vertices)?;
    let corpus_dir = dir.join("corpus");
    gen_dataset(std::slice::from_ref(&shape), &cfg.dataset, cfg.seeds.dataset, &corpus_dir)?;
    let mut files = BTreeMap::new();
    for entry in walk(&corpus_dir)? {
        files.insert(entry.strip_prefix(&corpus_dir)?.to_string_lossy().into_owned(), fs::read(&entry)?);
    }
    let corpus = load_corpus(&corpus_dir)?;
    let (model, _) = train_model(&corpus, std::slice::from_ref(&shape), &cfg, cfg.seeds.training)?;
    let bench = Bench::new(shape, cfg.evaluation.probes, cfg.evaluation.reference_vertices, cfg.seeds.probes)?;
    let problems = held_out(&cfg, &bench, cfg.seeds.evaluation, cfg.evaluation.problems)?;
    let jobs = vec![
        Job::Lamg { model: &model, n: cfg.run.n, m: cfg.run.m, eta: cfg.run.eta },
        Job::Amr,
        Job::Amg { eta: 1.0 },
        Job::Wos,
        Job::Uniform { sizes: uniform_sizes(&cfg, &bench)? },
    ];
    let records = run_jobs(&cfg, &bench, &problems, &jobs)?;
    let mut buf = Vec::new();
    write_runs(&records, &mut buf)?;
    Ok((files, strip_timings(std::str::from_utf8(&buf)?)?))
}

fn walk(dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir)? {
        let p = e?.path();
        if p.is_dir() {
            out.extend(walk(&p)?);
        } else {
            out.push(p);
        }
    }
    Ok(out)
}

fn reproducibility() -> Check {
    let (a, b) = (tempfile::tempdir()?, tempfile::tempdir()?);
    let (fa, ra) = small_experiment(a.path())?;
    let (fb, rb) = small_experiment(b.path())?;
    let differing = fa.iter().filter(|(k, v)| fb.get(*k) != Some(*v)).count() + fb.keys().filter(|k| !fa.contains_key(*k)).count();
    let rows = ra.lines().count().saturating_sub(1);
    Ok((
        differing == 0 && ra == rb && rows > 0,
        format!("{} corpus files, {differing} differ; {rows} run rows, CSVs identical: {}", fa.len(), ra == rb),
    ))
}

fn main() -> ExitCode {
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let selected = |n: usize| only.is_empty() || only.contains(&n);
    let mut study: Option<Result<Study, String>> = None;
    let mut failed = 0;
    for n in 1..=10 {
        if !selected(n) {
            continue;
        }
        let t = Instant::now();
        let res = match n {
            1 => fem_exactness(),
            2 => wos_correctness(),
            3 => sizing_inversion(),
            4 => loss_fidelity(),
            5 => amr_effectiveness(),
            6..=8 => match study.get_or_insert_with(|| Study::build().map_err(|e| e.to_string())) {
                Ok(s) => match n {
                    6 => end_to_end(s),
                    7 => eta_tradeoff(s),
                    _ => robustness(s),
                },
                Err(e) => Err(format!("study setup failed: {e}").into()),
            },
            9 => graph_construction(),
            _ => reproducibility(),
        };
        let (pass, detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += !pass as usize;
        println!("criterion {n}: {} ({:.1} s) {detail}", if pass { "PASS" } else { "FAIL" }, t.elapsed().as_secs_f64());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use lamg_core::amr::{amr_loop, AmrConfig};
use lamg_core::fem::{self, Solution, TetMesh};
use lamg_core::geometry::{Rng, Vec3};
use lamg_core::mesher;
use lamg_core::nnet::{self, build_graph, NetParams, TrainOutcome, TrainSample};
use lamg_core::sizing::{reference_field, Normalization, SizingField};
use lamg_core::wos::{self, PoissonProblem, SampleSet, WosConfig};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::dataset::{Example, Shape};
use crate::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lamg,
    Amr,
    Wos,
    Uniform,
    Amg,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Lamg, Method::Amr, Method::Wos, Method::Uniform, Method::Amg];

    pub fn name(self) -> &'static str {
        match self {
            Method::Lamg => "lamg",
            Method::Amr => "amr",
            Method::Wos => "wos",
            Method::Uniform => "uniform",
            Method::Amg => "amg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StageTimes {
    pub mc_s: f64,
    pub inference_s: f64,
    pub amr_s: f64,
    pub meshing_s: f64,
    pub fem_s: f64,
}

impl StageTimes {
    pub fn sum(&self) -> f64 {
        self.mc_s + self.inference_s + self.amr_s + self.meshing_s + self.fem_s
    }
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot += t.elapsed().as_secs_f64();
    out
}

/// One method applied to one problem. Columns ending in `_s` are timings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: Method,
    pub shape: String,
    pub problem: usize,
    pub n: usize,
    pub m: usize,
    pub eta: f64,
    pub vertices: usize,
    pub tets: usize,
    pub re_l2: f64,
    pub re_linf: f64,
    pub mc_s: f64,
    pub inference_s: f64,
    pub amr_s: f64,
    pub meshing_s: f64,
    pub fem_s: f64,
    pub total_s: f64,
}

/// A finished run: its record (errors not yet filled in) and the computed
/// solution at the leading probe points.
#[derive(Debug, Clone)]
pub struct Run {
    pub record: RunRecord,
    pub at_probes: Vec<f64>,
}

/// Identifies a problem inside a run record.
#[derive(Debug, Clone)]
pub struct Case<'a> {
    pub shape: &'a Shape,
    pub problem: &'a PoissonProblem,
    pub index: usize,
    /// Stream for the method's own randomness.
    pub rng: Rng,
    pub probes: &'a [Vec3],
}

impl Case<'_> {
    fn record(&self, method: Method, times: StageTimes, total_s: f64) -> RunRecord {
        RunRecord {
            method,
            shape: self.shape.name.clone(),
            problem: self.index,
            n: 0,
            m: 0,
            eta: 0.0,
            vertices: 0,
            tets: 0,
            re_l2: f64::NAN,
            re_linf: f64::NAN,
            mc_s: times.mc_s,
            inference_s: times.inference_s,
            amr_s: times.amr_s,
            meshing_s: times.meshing_s,
            fem_s: times.fem_s,
            total_s,
        }
    }
}

/// Trained network plus what is needed to turn its output into sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: NetParams,
    pub normalization: Normalization,
    pub k: usize,
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    normalization: Normalization,
    k: usize,
    learnables: usize,
}

impl Model {
    pub fn save(&self, dir: &Path) -> Result<(), PipelineError> {
        fs::create_dir_all(dir)?;
        self.params.write(BufWriter::new(File::create(dir.join("model.bin"))?))?;
        let meta = ModelMeta { normalization: self.normalization, k: self.k, learnables: self.params.count() };
        fs::write(dir.join("model.json"), serde_json::to_string_pretty(&meta).map_err(|e| PipelineError::Format(e.to_string()))? + "\n")?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, PipelineError> {
        let params = NetParams::read(std::io::BufReader::new(File::open(dir.join("model.bin"))?))?;
        let meta: ModelMeta = serde_json::from_str(&fs::read_to_string(dir.join("model.json"))?)
            .map_err(|e| PipelineError::Format(e.to_string()))?;
        Ok(Self { params, normalization: meta.normalization, k: meta.k })
    }

    /// Sizing field predicted from Monte Carlo samples.
    pub fn predict(&self, shape: &Shape, samples: &SampleSet) -> Result<SizingField, PipelineError> {
        let g = build_graph(&samples.points, &samples.values, &shape.boundary, self.k.min(samples.n().saturating_sub(1)).max(1))?;
        let s = self.params.predict(&g)?;
        let mut field = SizingField::new(samples.points.clone(), s);
        field.normalization = Some(self.normalization);
        Ok(field.denormalize())
    }
}

fn training_samples(corpus: &[Example], shapes: &[Shape], norm: &Normalization, k: usize) -> Result<Vec<TrainSample>, PipelineError> {
    corpus
        .iter()
        .map(|ex| {
            let shape = shapes
                .iter()
                .find(|s| s.name == ex.record.shape)
                .ok_or_else(|| PipelineError::Config(format!("corpus shape {} not configured", ex.record.shape)))?;
            let graph = build_graph(&ex.samples.points, &ex.samples.values, &shape.boundary, k)?;
            let target = ex.sizing.physical_sizes().iter().map(|&s| norm.normalize(s)).collect();
            Ok(TrainSample { graph, target })
        })
        .collect()
}

/// Fits the size normalization on the corpus and trains the configured preset.
pub fn train_model(corpus: &[Example], shapes: &[Shape], cfg: &ExperimentConfig, seed: u64) -> Result<(Model, TrainOutcome), PipelineError> {
    let all: Vec<f64> = corpus.iter().flat_map(|e| e.sizing.physical_sizes()).collect();
    let normalization = Normalization::fit(all.iter())?;
    let data = training_samples(corpus, shapes, &normalization, cfg.model.k)?;
    let train_cfg = lamg_core::nnet::TrainConfig { seed, ..cfg.train.clone() };
    let outcome = nnet::train(&data, cfg.model.preset.net(), &train_cfg, &mut Rng::new(seed))?;
    let model = Model { params: outcome.params.clone(), normalization, k: cfg.model.k };
    Ok((model, outcome))
}

/// Where the sizing field of a one-shot adaptive mesh comes from.
pub trait SizingSource {
    fn method(&self) -> Method;
    fn sizing(&self, case: &Case, times: &mut StageTimes) -> Result<SizingField, PipelineError>;
}

/// Network prediction from `n` Monte Carlo samples with `m` walks each.
pub struct Learned<'a> {
    pub model: &'a Model,
    pub n: usize,
    pub m: usize,
}

impl SizingSource for Learned<'_> {
    fn method(&self) -> Method {
        Method::Lamg
    }

    fn sizing(&self, case: &Case, times: &mut StageTimes) -> Result<SizingField, PipelineError> {
        let wos_cfg = WosConfig::for_mesh(&case.shape.boundary, self.m);
        let samples = timed(&mut times.mc_s, || wos::solve_sparse(case.problem, self.n, &wos_cfg, &case.rng.substream(1)))?;
        timed(&mut times.inference_s, || self.model.predict(case.shape, &samples))
    }
}

/// Reference field of an AMR run, sampled at `points` interior points.
pub struct FromAmr {
    pub amr: AmrConfig,
    pub points: usize,
}

impl SizingSource for FromAmr {
    fn method(&self) -> Method {
        Method::Amg
    }

    fn sizing(&self, case: &Case, times: &mut StageTimes) -> Result<SizingField, PipelineError> {
        timed(&mut times.amr_s, || {
            let out = amr_loop(case.problem, Arc::new(case.shape.coarse_mesh()?), &self.amr)?;
            let pts = case.shape.boundary.sample_interior(self.points, &mut case.rng.substream(2))?;
            Ok(reference_field(&out.mesh, &pts).0)
        })
    }
}

/// A fixed field, for injecting a known sizing into the adaptive path.
pub struct Fixed(pub Method, pub SizingField);

impl SizingSource for Fixed {
    fn method(&self) -> Method {
        self.0
    }

    fn sizing(&self, _: &Case, _: &mut StageTimes) -> Result<SizingField, PipelineError> {
        Ok(self.1.clone())
    }
}

/// Output of the shared one-shot path, kept for inspection.
pub struct AdaptiveRun {
    pub run: Run,
    pub field: SizingField,
    pub mesh: Arc<TetMesh>,
    pub solution: Solution,
}

/// Sizing from `source`, one adaptive mesh, one FEM solve.
pub fn run_adaptive(case: &Case, source: &dyn SizingSource, eta: f64) -> Result<AdaptiveRun, PipelineError> {
    let mut times = StageTimes::default();
    let start = Instant::now();
    let field = source.sizing(case, &mut times)?;
    let mesh = Arc::new(timed(&mut times.meshing_s, || mesher::mesh_adaptive(&case.shape.boundary, &field, eta))?);
    let solution = timed(&mut times.fem_s, || fem::solve_problem(mesh.clone(), case.problem))?;
    let total = start.elapsed().as_secs_f64();
    let mut record = case.record(source.method(), times, total);
    record.eta = eta;
    record.vertices = mesh.num_vertices();
    record.tets = mesh.num_tets();
    let at_probes = solution.sample(case.probes);
    Ok(AdaptiveRun { run: Run { record, at_probes }, field, mesh, solution })
}

pub fn run_lamg(case: &Case, model: &Model, n: usize, m: usize, eta: f64) -> Result<Run, PipelineError> {
    let mut run = run_adaptive(case, &Learned { model, n, m }, eta)?.run;
    run.record.n = n;
    run.record.m = m;
    Ok(run)
}

pub fn run_amg(case: &Case, amr: &AmrConfig, points: usize, eta: f64) -> Result<Run, PipelineError> {
    let mut run = run_adaptive(case, &FromAmr { amr: *amr, points }, eta)?.run;
    run.record.n = points;
    Ok(run)
}

/// Iterative AMR from the coarse uniform mesh; the loop ends with a solve on
/// the final mesh.
pub fn run_amr(case: &Case, amr: &AmrConfig) -> Result<Run, PipelineError> {
    let mut times = StageTimes::default();
    let start = Instant::now();
    let coarse = timed(&mut times.meshing_s, || case.shape.coarse_mesh())?;
    let out = timed(&mut times.amr_s, || amr_loop(case.problem, Arc::new(coarse), amr))?;
    let total = start.elapsed().as_secs_f64();
    let mut record = case.record(Method::Amr, times, total);
    record.vertices = out.mesh.num_vertices();
    record.tets = out.mesh.num_tets();
    Ok(Run { record, at_probes: out.solution.sample(case.probes) })
}

/// Dense walk-on-spheres at the first `points` probes.
pub fn run_wos(case: &Case, points: usize, m: usize) -> Result<Run, PipelineError> {
    let mut times = StageTimes::default();
    let pts = &case.probes[..points.min(case.probes.len())];
    let wos_cfg = WosConfig::for_mesh(&case.shape.boundary, m);
    let start = Instant::now();
    let set = timed(&mut times.mc_s, || wos::estimate_points(case.problem, pts, &wos_cfg, &case.rng.substream(3)));
    let total = start.elapsed().as_secs_f64();
    let mut record = case.record(Method::Wos, times, total);
    record.n = pts.len();
    record.m = m;
    Ok(Run { record, at_probes: set.values })
}

/// Uniform mesh of the given size and one solve.
pub fn run_uniform(case: &Case, size: f64) -> Result<Run, PipelineError> {
    let mut times = StageTimes::default();
    let start = Instant::now();
    let mesh = Arc::new(timed(&mut times.meshing_s, || mesher::mesh_uniform(&case.shape.boundary, size))?);
    let solution = timed(&mut times.fem_s, || fem::solve_problem(mesh.clone(), case.problem))?;
    let total = start.elapsed().as_secs_f64();
    let mut record = case.record(Method::Uniform, times, total);
    record.vertices = mesh.num_vertices();
    record.tets = mesh.num_tets();
    Ok(Run { record, at_probes: solution.sample(case.probes) })
}

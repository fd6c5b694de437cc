use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lamg_core::amr::{self, amr_loop};
use lamg_core::fem::TetMesh;
use lamg_core::geometry::{self, shapes, BoundaryMesh, Rng};
use lamg_core::mesher;
use lamg_core::sizing::{reference_field, SizingField};
use lamg_core::wos::{self, PoissonProblem, ProblemSpec, SampleSet, WosConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{DatasetConfig, Span};
use crate::PipelineError;

pub fn load_shape(name: &str) -> Result<BoundaryMesh, PipelineError> {
    Ok(match name {
        "cube" => shapes::cube(1.0),
        "ball" => shapes::icosphere(0.5, 3),
        "torus" => shapes::torus(0.5, 0.2, 64, 32),
        path => geometry::io::load(Path::new(path))?,
    })
}

/// A domain together with the uniform mesh sizes hitting the coarse AMR
/// start and the reference resolution.
#[derive(Debug, Clone)]
pub struct Shape {
    pub name: String,
    pub boundary: Arc<BoundaryMesh>,
    pub coarse_size: f64,
}

impl Shape {
    pub fn new(name: &str, coarse_vertices: usize) -> Result<Self, PipelineError> {
        let boundary = Arc::new(load_shape(name)?);
        let (_, coarse_size) = mesher::mesh_uniform_with_vertices(&boundary, coarse_vertices)?;
        Ok(Self { name: name.to_string(), boundary, coarse_size })
    }

    pub fn coarse_mesh(&self) -> Result<TetMesh, PipelineError> {
        Ok(mesher::mesh_uniform(&self.boundary, self.coarse_size)?)
    }
}

/// Index `index` of the stream seeded by `seed`: problem parameters plus
/// Monte Carlo sample counts drawn from the dataset ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub index: usize,
    pub shape: String,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub spec: ProblemSpec,
}

impl ProblemRecord {
    pub fn problem(&self, boundary: Arc<BoundaryMesh>) -> PoissonProblem {
        self.spec.problem(boundary)
    }

    /// Stream for everything random about this problem.
    pub fn rng(&self) -> Rng {
        Rng::new(self.seed).substream(self.index as u64)
    }
}

/// Draws problem `index` of the stream `seed`. Substream 0 of the problem
/// stream feeds the parameters.
pub fn draw_problem(shape: &Shape, cfg: &DatasetConfig, seed: u64, index: usize) -> Result<ProblemRecord, PipelineError> {
    let mut rng = Rng::new(seed).substream(index as u64).substream(0);
    let spec = ProblemSpec::random(&shape.boundary, &cfg.ranges, &mut rng)?;
    let draw = |s: Span, rng: &mut Rng| rng.range_inclusive(s.min, s.max);
    let n = draw(cfg.n, &mut rng);
    let m = draw(cfg.m, &mut rng);
    Ok(ProblemRecord { index, shape: shape.name.clone(), seed, n, m, spec })
}

/// Training example: samples and the AMR-derived reference size at each.
#[derive(Debug, Clone)]
pub struct Example {
    pub record: ProblemRecord,
    pub samples: SampleSet,
    pub sizing: SizingField,
}

/// WoS samples (substream 1) and the AMR reference field at the sample
/// points. Samples the AMR mesh cannot locate are dropped.
pub fn build_example(shape: &Shape, record: ProblemRecord, cfg: &DatasetConfig) -> Result<(Example, Vec<amr::AmrIteration>), PipelineError> {
    let prob = record.problem(shape.boundary.clone());
    let wos_cfg = WosConfig::for_mesh(&shape.boundary, record.m);
    let mut samples = wos::solve_sparse(&prob, record.n, &wos_cfg, &record.rng().substream(1))?;
    let out = amr_loop(&prob, Arc::new(shape.coarse_mesh()?), &cfg.amr)?;
    let (sizing, skipped) = reference_field(&out.mesh, &samples.points);
    if !skipped.is_empty() {
        let keep: Vec<bool> = (0..samples.n()).map(|i| !skipped.contains(&i)).collect();
        retain_mask(&mut samples.points, &keep);
        retain_mask(&mut samples.values, &keep);
        retain_mask(&mut samples.variances, &keep);
        retain_mask(&mut samples.walks, &keep);
    }
    Ok((Example { record, samples, sizing }, out.telemetry))
}

fn retain_mask<T>(v: &mut Vec<T>, keep: &[bool]) {
    let mut it = keep.iter();
    v.retain(|_| *it.next().unwrap());
}

fn problem_dir(root: &Path, shape: &str, index: usize) -> PathBuf {
    let stem = Path::new(shape).file_stem().and_then(|s| s.to_str()).unwrap_or("shape");
    root.join(format!("{stem}_{index:04}"))
}

fn write_example(dir: &Path, ex: &Example, telemetry: &[amr::AmrIteration]) -> Result<(), PipelineError> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(&ex.record).map_err(|e| PipelineError::Format(e.to_string()))?;
    fs::write(dir.join("problem.json"), json + "\n")?;
    ex.samples.write_csv(BufWriter::new(File::create(dir.join("samples.csv"))?))?;
    ex.sizing.write_csv(BufWriter::new(File::create(dir.join("sizing.csv"))?))?;
    amr::write_telemetry(telemetry, BufWriter::new(File::create(dir.join("amr.csv"))?))?;
    Ok(())
}

pub fn read_example(dir: &Path) -> Result<Example, PipelineError> {
    let record: ProblemRecord = serde_json::from_str(&fs::read_to_string(dir.join("problem.json"))?)
        .map_err(|e| PipelineError::Format(format!("{}: {e}", dir.display())))?;
    let samples = SampleSet::read_csv(File::open(dir.join("samples.csv"))?)?;
    let sizing = SizingField::read_csv(File::open(dir.join("sizing.csv"))?)?;
    if sizing.len() != samples.n() {
        return Err(PipelineError::Format(format!("{}: {} sizes for {} samples", dir.display(), sizing.len(), samples.n())));
    }
    Ok(Example { record, samples, sizing })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub config: DatasetConfig,
    pub problems: Vec<String>,
    pub failed: Vec<String>,
}

/// Generates `cfg.problems` problems per shape into `root`. Failed problems
/// are logged and left out of the manifest.
pub fn gen_dataset(shapes: &[Shape], cfg: &DatasetConfig, seed: u64, root: &Path) -> Result<Manifest, PipelineError> {
    fs::create_dir_all(root)?;
    let jobs: Vec<(&Shape, usize)> = shapes.iter().flat_map(|s| (0..cfg.problems).map(move |i| (s, i))).collect();
    let results: Vec<(String, Result<(), PipelineError>)> = jobs
        .par_iter()
        .map(|&(shape, i)| {
            let dir = problem_dir(root, &shape.name, i);
            let name = dir.file_name().unwrap().to_string_lossy().into_owned();
            let res = draw_problem(shape, cfg, seed, i)
                .and_then(|r| build_example(shape, r, cfg))
                .and_then(|(ex, tel)| write_example(&dir, &ex, &tel));
            (name, res)
        })
        .collect();
    let mut manifest = Manifest { seed, config: cfg.clone(), problems: Vec::new(), failed: Vec::new() };
    for (name, res) in results {
        match res {
            Ok(()) => manifest.problems.push(name),
            Err(e) => {
                log::warn!("problem {name} failed: {e}");
                manifest.failed.push(name);
            }
        }
    }
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| PipelineError::Format(e.to_string()))?;
    fs::write(root.join("manifest.json"), json + "\n")?;
    Ok(manifest)
}

pub fn load_corpus(root: &Path) -> Result<Vec<Example>, PipelineError> {
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(root.join("manifest.json"))?)
        .map_err(|e| PipelineError::Format(e.to_string()))?;
    manifest.problems.iter().map(|p| read_example(&root.join(p))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem_draws_are_seeded_and_in_range() {
        let shape = Shape { name: "cube".into(), boundary: Arc::new(shapes::cube(1.0)), coarse_size: 0.1 };
        let cfg = DatasetConfig::default();
        let a = draw_problem(&shape, &cfg, 7, 3).unwrap();
        assert_eq!(a, draw_problem(&shape, &cfg, 7, 3).unwrap());
        assert_ne!(a, draw_problem(&shape, &cfg, 7, 4).unwrap());
        assert!((200..=2000).contains(&a.n) && (500..=1000).contains(&a.m));
        for g in &a.spec.gaussians {
            assert!(shape.boundary.distance_to_boundary(&g.center).0 <= shape.boundary.eps());
        }
    }
}

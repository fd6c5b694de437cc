use std::path::{Path, PathBuf};

use lamg_core::amr::AmrConfig;
use lamg_core::nnet::{NetConfig, TrainConfig, DEFAULT_K};
use lamg_core::wos::ProblemRanges;
use serde::{Deserialize, Serialize};

use crate::PipelineError;

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub min: usize,
    pub max: usize,
}

impl Span {
    pub fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub problems: usize,
    /// Sample points per problem.
    pub n: Span,
    /// Walks per sample point.
    pub m: Span,
    pub ranges: ProblemRanges,
    /// Vertex count of the uniform mesh AMR starts from.
    pub coarse_vertices: usize,
    pub amr: AmrConfig,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            problems: 100,
            n: Span::new(200, 2000),
            m: Span::new(500, 1000),
            ranges: ProblemRanges::default(),
            coarse_vertices: 5500,
            amr: AmrConfig { vertex_budget: 15_000, ..AmrConfig::default() },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelPreset {
    Small,
    Medium,
    Large,
}

impl ModelPreset {
    pub fn net(self) -> NetConfig {
        match self {
            ModelPreset::Small => NetConfig::small(),
            ModelPreset::Medium => NetConfig::medium(),
            ModelPreset::Large => NetConfig::large(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub preset: ModelPreset,
    /// Neighbours per node in the sample graph.
    pub k: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self { preset: ModelPreset::Small, k: DEFAULT_K }
    }
}

/// Inference settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub n: usize,
    pub m: usize,
    pub eta: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { n: 500, m: 50, eta: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub amr: AmrConfig,
    /// Sizing-field sample points for the amg baseline.
    pub amg_points: usize,
    pub wos_points: usize,
    pub wos_m: usize,
    /// Target vertex counts of the uniform sweep.
    pub uniform_vertices: Vec<usize>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            amr: AmrConfig::default(),
            amg_points: 2000,
            wos_points: 2000,
            wos_m: 1000,
            uniform_vertices: vec![2000, 5000, 10_000, 20_000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    /// Vertex count of the uniform reference mesh.
    pub reference_vertices: usize,
    pub probes: usize,
    /// Held-out problems drawn for `run` and `baseline`.
    pub problems: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { reference_vertices: 50_000, probes: 4096, problems: 20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Seeds {
    pub dataset: u64,
    pub training: u64,
    pub evaluation: u64,
    pub probes: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Self { dataset: 1, training: 2, evaluation: 3, probes: 4 }
    }
}

/// One experiment, read from a TOML (or JSON) file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Built-in shape names (`cube`, `ball`, `torus`) or paths to OBJ/STL files.
    pub shapes: Vec<String>,
    pub output_dir: PathBuf,
    pub seeds: Seeds,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub run: RunConfig,
    pub baseline: BaselineConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            shapes: vec!["cube".into()],
            output_dir: PathBuf::from("out"),
            seeds: Seeds::default(),
            dataset: DatasetConfig::default(),
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            run: RunConfig::default(),
            baseline: BaselineConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path)?;
        let cfg: Self = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| PipelineError::Config(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |msg: &str| Err(PipelineError::Config(msg.into()));
        if self.shapes.is_empty() {
            return bad("no shapes");
        }
        let d = &self.dataset;
        if d.n.min == 0 || d.n.min > d.n.max || d.m.min == 0 || d.m.min > d.m.max {
            return bad("empty n or m range");
        }
        let r = &d.ranges;
        if r.gaussians.0 > r.gaussians.1 || r.spheres.0 > r.spheres.1 {
            return bad("empty gaussian or sphere count range");
        }
        if !(self.run.eta > 0.0) || self.run.n == 0 || self.run.m == 0 {
            return bad("run needs n, m > 0 and eta > 0");
        }
        if self.model.k == 0 {
            return bad("k must be positive");
        }
        let t = &self.train;
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !(unit(t.s_lo) && unit(t.s_hi) && unit(t.beta)) || t.alpha < 0.0 {
            return bad("loss thresholds must lie in (0, 1) and alpha must be non-negative");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        let back: ExperimentConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.dataset.ranges.gaussians, (40, 50));
        assert_eq!(cfg.dataset.ranges.spheres, (20, 30));
        assert_eq!((cfg.dataset.n, cfg.dataset.m), (Span::new(200, 2000), Span::new(500, 1000)));
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg: ExperimentConfig = toml::from_str("shapes = [\"torus\"]\n[model]\npreset = \"medium\"\n[run]\neta = 0.7\n").unwrap();
        assert_eq!(cfg.shapes, vec!["torus"]);
        assert_eq!(cfg.run.eta, 0.7);
        assert_eq!(cfg.run.n, 500);
        assert_eq!(cfg.model.preset, ModelPreset::Medium);
        assert!(cfg.validate().is_ok());
        let mut broken = cfg.clone();
        broken.train.s_hi = 1.5;
        assert!(broken.validate().is_err());
    }
}

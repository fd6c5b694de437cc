use lamg_core::mesher;

use crate::config::ExperimentConfig;
use crate::dataset::{draw_problem, ProblemRecord};
use crate::evaluate::{evaluate, Bench};
use crate::methods::{run_amg, run_amr, run_lamg, run_uniform, run_wos, Case, Model, RunRecord};
use crate::PipelineError;

/// One method with its settings.
#[derive(Debug, Clone)]
pub enum Job<'a> {
    Lamg { model: &'a Model, n: usize, m: usize, eta: f64 },
    Amr,
    Amg { eta: f64 },
    Wos,
    /// Uniform meshes of the given sizes.
    Uniform { sizes: Vec<f64> },
}

/// Held-out problems `0..count` of the stream `seed`.
pub fn held_out(cfg: &ExperimentConfig, bench: &Bench, seed: u64, count: usize) -> Result<Vec<ProblemRecord>, PipelineError> {
    (0..count).map(|i| draw_problem(&bench.shape, &cfg.dataset, seed, i)).collect()
}

/// Uniform mesh sizes for the configured vertex targets.
pub fn uniform_sizes(cfg: &ExperimentConfig, bench: &Bench) -> Result<Vec<f64>, PipelineError> {
    cfg.baseline
        .uniform_vertices
        .iter()
        .map(|&v| Ok(mesher::mesh_uniform_with_vertices(&bench.shape.boundary, v)?.1))
        .collect()
}

/// Runs every job on every problem, sequentially so timings stay clean,
/// and evaluates against the bench reference.
pub fn run_jobs(cfg: &ExperimentConfig, bench: &Bench, problems: &[ProblemRecord], jobs: &[Job]) -> Result<Vec<RunRecord>, PipelineError> {
    let mut out = Vec::new();
    for rec in problems {
        let prob = rec.problem(bench.shape.boundary.clone());
        let reference = bench.reference(&prob)?;
        let case = Case { shape: &bench.shape, problem: &prob, index: rec.index, rng: rec.rng(), probes: &bench.probes };
        for job in jobs {
            let runs = match job {
                Job::Lamg { model, n, m, eta } => vec![run_lamg(&case, model, *n, *m, *eta)?],
                Job::Amr => vec![run_amr(&case, &cfg.baseline.amr)?],
                Job::Amg { eta } => vec![run_amg(&case, &cfg.baseline.amr, cfg.baseline.amg_points, *eta)?],
                Job::Wos => vec![run_wos(&case, cfg.baseline.wos_points, cfg.baseline.wos_m)?],
                Job::Uniform { sizes } => sizes.iter().map(|&s| run_uniform(&case, s)).collect::<Result<_, _>>()?,
            };
            for mut run in runs {
                evaluate(&mut run, &reference)?;
                log::info!(
                    "{} problem {}: {} vertices, RE {:.4e}, {:.3} s",
                    run.record.method.name(),
                    rec.index,
                    run.record.vertices,
                    run.record.re_l2,
                    run.record.total_s
                );
                out.push(run.record);
            }
        }
    }
    Ok(out)
}

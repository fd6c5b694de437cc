use std::fs::{self, File};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lamg_core::nnet::write_curve;
use lamg_pipeline::config::ExperimentConfig;
use lamg_pipeline::dataset::{gen_dataset, load_corpus, Shape};
use lamg_pipeline::evaluate::Bench;
use lamg_pipeline::experiment::{held_out, run_jobs, uniform_sizes, Job};
use lamg_pipeline::methods::{train_model, Method, Model};
use lamg_pipeline::report::{read_runs, write_report, write_runs};
use lamg_pipeline::PipelineError;

#[derive(Parser)]
#[command(name = "lamg", about = "Learned adaptive meshing experiments")]
struct Cli {
    /// Experiment file (TOML or JSON); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed the subcommand uses.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a training corpus.
    Gen {
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        problems: Option<usize>,
    },
    /// Train a model on a corpus.
    Train {
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run learned sizing on held-out problems.
    Run {
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
    },
    /// Run a baseline (amr, wos, uniform, amg) on held-out problems.
    Baseline {
        #[arg(long)]
        method: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Combine run CSVs into tables and figures.
    Report {
        #[arg(long, required = true, num_args = 1..)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn shapes(cfg: &ExperimentConfig) -> Result<Vec<Shape>, PipelineError> {
    cfg.shapes.iter().map(|s| Shape::new(s, cfg.dataset.coarse_vertices)).collect()
}

fn benches(cfg: &ExperimentConfig) -> Result<Vec<Bench>, PipelineError> {
    shapes(cfg)?
        .into_iter()
        .map(|s| Bench::new(s, cfg.evaluation.probes, cfg.evaluation.reference_vertices, cfg.seeds.probes))
        .collect()
}

fn evaluate_all<'a>(
    cfg: &ExperimentConfig,
    seed: u64,
    make: impl Fn(&Bench) -> Result<Vec<Job<'a>>, PipelineError>,
    out: PathBuf,
) -> Result<(), PipelineError> {
    let mut records = Vec::new();
    for bench in benches(cfg)? {
        let problems = held_out(cfg, &bench, seed, cfg.evaluation.problems)?;
        records.extend(run_jobs(cfg, &bench, &problems, &make(&bench)?)?);
    }
    if let Some(dir) = out.parent() {
        fs::create_dir_all(dir)?;
    }
    write_runs(&records, File::create(&out)?)?;
    println!("{} runs written to {}", records.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let root = cfg.output_dir.clone();
    match cli.command {
        Command::Gen { out, problems } => {
            let mut dcfg = cfg.dataset.clone();
            if let Some(p) = problems {
                dcfg.problems = p;
            }
            let out = out.unwrap_or_else(|| root.join("corpus"));
            let m = gen_dataset(&shapes(&cfg)?, &dcfg, cli.seed.unwrap_or(cfg.seeds.dataset), &out)?;
            println!("{} problems written to {} ({} failed)", m.problems.len(), out.display(), m.failed.len());
            if !m.failed.is_empty() {
                return Err(PipelineError::Format(format!("{} problems failed", m.failed.len())));
            }
        }
        Command::Train { data, out } => {
            let corpus = load_corpus(&data.unwrap_or_else(|| root.join("corpus")))?;
            let (model, outcome) = train_model(&corpus, &shapes(&cfg)?, &cfg, cli.seed.unwrap_or(cfg.seeds.training))?;
            let out = out.unwrap_or_else(|| root.join("model"));
            model.save(&out)?;
            write_curve(&outcome.curve, File::create(out.join("curve.csv"))?)?;
            let last = outcome.curve.last().map_or(f64::NAN, |e| e.train_loss);
            println!(
                "trained on {} problems: loss {:.5} -> {:.5}, best epoch {}",
                corpus.len(),
                outcome.initial_loss,
                last,
                outcome.best_epoch
            );
        }
        Command::Run { model, out, eta, n, m } => {
            let model = Model::load(&model.unwrap_or_else(|| root.join("model")))?;
            let (n, m, eta) = (n.unwrap_or(cfg.run.n), m.unwrap_or(cfg.run.m), eta.unwrap_or(cfg.run.eta));
            let seed = cli.seed.unwrap_or(cfg.seeds.evaluation);
            let out = out.unwrap_or_else(|| root.join("runs_lamg.csv"));
            evaluate_all(&cfg, seed, |_| Ok(vec![Job::Lamg { model: &model, n, m, eta }]), out)?;
        }
        Command::Baseline { method, out } => {
            let method = Method::parse(&method).ok_or_else(|| PipelineError::Config(format!("unknown method {method}")))?;
            let seed = cli.seed.unwrap_or(cfg.seeds.evaluation);
            let out = out.unwrap_or_else(|| root.join(format!("runs_{}.csv", method.name())));
            let eta = cfg.run.eta;
            evaluate_all(
                &cfg,
                seed,
                |bench| {
                    Ok(vec![match method {
                        Method::Amr => Job::Amr,
                        Method::Amg => Job::Amg { eta },
                        Method::Wos => Job::Wos,
                        Method::Uniform => Job::Uniform { sizes: uniform_sizes(&cfg, bench)? },
                        Method::Lamg => return Err(PipelineError::Config("lamg is not a baseline; use `run`".into())),
                    }])
                },
                out,
            )?;
        }
        Command::Report { runs, out } => {
            let mut records = Vec::new();
            for p in &runs {
                records.extend(read_runs(File::open(p)?)?);
            }
            let out = out.unwrap_or_else(|| root.join("report"));
            write_report(&records, &out)?;
            println!("report for {} runs written to {}", records.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

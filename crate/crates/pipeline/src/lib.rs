//! Experiment orchestration: training corpora, learned sizing inference,
//! baselines, error evaluation and reports.

pub mod config;
pub mod dataset;
pub mod evaluate;
pub mod experiment;
pub mod methods;
pub mod report;

use lamg_core::{amr, fem, geometry, mesher, nnet, sizing, wos};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Wos(#[from] wos::WosError),
    #[error(transparent)]
    Fem(#[from] fem::FemError),
    #[error(transparent)]
    Amr(#[from] amr::AmrError),
    #[error(transparent)]
    Mesher(#[from] mesher::MesherError),
    #[error(transparent)]
    Sizing(#[from] sizing::SizingError),
    #[error(transparent)]
    Nnet(#[from] nnet::NnetError),
}

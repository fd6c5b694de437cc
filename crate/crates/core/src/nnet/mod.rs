//! Graph network mapping Monte Carlo samples to normalized mesh sizes.

mod graph;
mod loss;
mod net;
mod train;

pub use graph::{build_graph, standardization, GraphBatch};
pub use loss::{importance_weights, loss, loss_with_grad, weight_high, weight_low, LossParts, TrainConfig};
pub use net::{Linear, NetConfig, NetParams};
pub use train::{gradients, train, write_curve, EpochStats, TrainOutcome, TrainSample};

/// Default neighbour count for graph construction.
pub const DEFAULT_K: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum NnetError {
    #[error("{n} points cannot form a {k}-nearest-neighbour graph")]
    TooFewPoints { n: usize, k: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("training diverged: {0}")]
    TrainingDiverged(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("bad parameter file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

//! Boundary surfaces and the spatial predicates the rest of the pipeline is
//! built on: closest point, containment, segment containment and interior
//! sampling.

mod aabb;
mod boundary;
mod bvh;
pub mod io;
mod knn;
pub mod predicates;
mod rng;
pub mod shapes;

pub use aabb::Aabb;
pub use boundary::{BoundaryMesh, ClosestPoint};
pub use bvh::Bvh;
pub use knn::PointIndex;
pub use rng::Rng;

use thiserror::Error;

pub type Vec3 = nalgebra::Vector3<f64>;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("invalid boundary mesh: {0}")]
    InvalidMesh(String),
    #[error("rejection sampling acceptance rate {rate:.2e} fell below 1e-4 after {trials} trials")]
    RejectionBudgetExceeded { trials: u64, rate: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Tolerance used by every near-boundary predicate, relative to the bounding
/// box diagonal.
pub const GEO_EPS_REL: f64 = 1e-9;

//! Learned adaptive tetrahedral meshing for the Poisson equation.
//!
//! Sparse walk-on-spheres estimates of the solution are fed to a small graph
//! network that predicts a sizing field; one adaptive tetrahedral mesh is
//! generated from that field and the problem is solved with a single P1 FEM
//! pass. Iterative AMR, dense walk-on-spheres and uniform meshing are provided
//! as baselines and as the source of training supervision.

pub mod amr;
pub mod fem;
pub mod geometry;
pub mod mesher;
pub mod nnet;
pub mod sizing;
pub mod wos;

pub use geometry::{BoundaryMesh, Rng, Vec3};

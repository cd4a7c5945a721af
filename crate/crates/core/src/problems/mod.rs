//! Instance generators and objective oracles: random convex QPs, simplex and
//! transport polytopes, Gromov-Wasserstein distance and barycenter objectives,
//! and a K-NN-like random graph generator.
//!
//! All generators draw from [`rng`], a seeded ChaCha8 stream, in a fixed
//! order so instances are reproducible across runs and platforms.

mod cqp;
mod graph;
mod gw;
mod transport;

pub use cqp::{gen_random_cqp, simplex_projection_problem};
pub use graph::{gen_knn_graph, KnnGraphPair};
pub use gw::{gw_objective, gw_problem, gwbc_objective, gwbc_problem, GwInstance, GwObjective, GwbcObjective};
pub use transport::{birkhoff_constraints, simplex_constraints, transport_constraints, TransportPolytope};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used by every seeded routine in the crate.
pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

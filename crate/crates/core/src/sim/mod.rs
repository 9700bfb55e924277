//! Ground-truth graph and precision-matrix generators with seeded
//! Gaussian samplers. Everything is a pure function of its parameters
//! and a `u64` seed (ChaCha8 streams), so replicates are reproducible
//! across platforms.

mod factor;
mod graphs;
mod precision;
mod sampler;

pub use factor::{gen_cholesky_factor, sample_from_factor, TriangularFactor};
pub use graphs::{gen_cluster_graph, gen_erdos_renyi, ClusterKind, CLUSTER_GRAPH_NODES};
pub use precision::{
    build_precision_bounded, build_precision_dominant, gen_chain, gen_star,
    min_symmetric_eigenvalue, GeneratorInfo, GraphModel, EIG_CAP,
};
pub use sampler::sample_gaussian;

//! Hyper-path random walks and joint pairwise/tuplewise node embeddings for
//! heterogeneous hyper-networks.
//!
//! The pipeline is: load a [`Hypergraph`], estimate per-type
//! indecomposability factors, generate a hyper-path biased walk corpus,
//! train a [`HypergramModel`], then score candidate hyperedges for link
//! prediction or reconstruction.

pub mod config;
pub mod error;
pub mod evaluation;
pub mod hypergraph;
pub mod indecomposability;
pub mod model;
pub mod pipeline;
pub mod seed;
pub mod synth;
pub mod walk;

pub use error::{Error, Result};
pub use hypergraph::{Hyperedge, Hypergraph, NodeId, NodeTypeId, Uniformity};
pub use indecomposability::{indecomposable_factor, FactorEstimate};
pub use model::{HypergramModel, TrainConfig};
pub use walk::{generate_corpus, Walk, WalkConfig, WalkCorpus};

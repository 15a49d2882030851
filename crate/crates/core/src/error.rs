use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unknown node `{label}` at line {line}")]
    UnknownNode { label: String, line: usize },

    #[error("degenerate edge at line {line}: {reason}")]
    DegenerateEdge { line: usize, reason: String },

    #[error("empty hypergraph")]
    EmptyHypergraph,

    #[error("invalid node {0}")]
    InvalidNode(usize),

    #[error("invalid node type {0}")]
    InvalidNodeType(usize),

    #[error("empty subset query")]
    EmptySubsetQuery,

    #[error("type too small: type `{type_name}` has {available} nodes, {required} required")]
    TypeTooSmall {
        type_name: String,
        available: usize,
        required: usize,
    },

    #[error("type too small for negatives: {0}")]
    TypeTooSmallForNegatives(String),

    #[error("invalid multiplier {0}, must be >= 1")]
    InvalidMultiplier(usize),

    #[error("dead end at node {0}")]
    DeadEnd(usize),

    #[error("isolated start node {0}")]
    IsolatedStart(usize),

    #[error("tuple channel requires uniform hypergraph")]
    NonUniformTupleChannel,

    #[error("undefined cosine: zero vector")]
    UndefinedCosine,

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("cannot generate negative for edge {0} after {1} attempts")]
    CannotGenerateNegative(usize, usize),

    #[error("empty score set")]
    EmptyScoreSet,

    #[error("reconstruction intractable: {candidates} candidates exceed cap {cap}")]
    ReconstructionIntractable { candidates: u128, cap: u128 },

    #[error("training diverged to non-finite parameters; lower the learning rate")]
    Diverged,

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    /// Whether the error stems from bad input or configuration rather than a
    /// failure while running. The CLI maps these to exit code 2.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::Parse { .. }
                | Error::UnknownNode { .. }
                | Error::DegenerateEdge { .. }
                | Error::EmptyHypergraph
                | Error::InvalidMultiplier(_)
                | Error::NonUniformTupleChannel
                | Error::ReconstructionIntractable { .. }
                | Error::Config(_)
                | Error::Checkpoint(_)
        )
    }
}

use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("embedding budget exceeded: {found} embeddings enumerated before stopping (cap {cap})")]
    EmbeddingBudget { found: usize, cap: usize },

    #[error("canonical codes are limited to {cap} vertices, graph has {vertices}")]
    CanonicalCap { vertices: usize, cap: usize },

    #[error("invalid probabilistic graph `{graph}`: {reason}")]
    InvalidProbGraph { graph: String, reason: String },

    #[error("graph `{graph}` has {edges} edges, above the oracle cap of {cap}")]
    OracleCap { graph: String, edges: usize, cap: usize },

    #[error("exact inference needs a factor over {width} edges (limit {limit}); switch to sampling mode")]
    InferenceBudget { width: usize, limit: usize },

    #[error("conditioning event has probability zero")]
    ZeroProbabilityCondition,

    #[error("estimation failed: none of {samples} samples satisfied the conditioning event")]
    EstimationFailure { samples: usize },

    #[error("event family exceeds cap of {cap} members")]
    FamilyCap { cap: usize },

    #[error("index does not match database: {0}")]
    IndexMismatch(String),

    #[error("unsupported format version {found} (this build reads up to {supported})")]
    FormatVersion { found: u32, supported: u32 },

    #[error("corrupt document: {0}")]
    Corrupt(String),

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn prob_graph(graph: &str, reason: impl Into<String>) -> Self {
        Error::InvalidProbGraph {
            graph: graph.to_string(),
            reason: reason.into(),
        }
    }
}

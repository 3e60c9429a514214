use crate::graph::Pair;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("self-loop on vertex {0} is not allowed")]
    SelfLoop(usize),

    #[error("duplicate pair {0}")]
    DuplicatePair(Pair),

    #[error("pair {0} in instance file must satisfy u < v")]
    UnorderedPair(Pair),

    #[error("probe contract violation: pair {0} was already probed")]
    PairAlreadyProbed(Pair),

    #[error("probe contract violation: vertex {0} is matched and removed")]
    VertexRemoved(usize),

    #[error("probe contract violation: pair {0} has zero edge probability")]
    PairNotProbeable(Pair),

    #[error("instance too large: {actual} {unit} exceeds limit {limit}")]
    InstanceTooLarge {
        actual: usize,
        limit: usize,
        unit: &'static str,
    },

    #[error("infeasible target profile: {0}")]
    Infeasible(String),

    #[error("target profile is malformed: {0}")]
    MalformedProfile(String),

    #[error("instance is not bipartite")]
    NotBipartite,

    #[error("Monte Carlo mode needs at least 2 trials, got {0}")]
    TooFewTrials(usize),

    #[error("expected optimum is zero; ratio undefined")]
    ZeroOptimum,

    #[error("estimates cover different pair sets")]
    MismatchedPairs,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

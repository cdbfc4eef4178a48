use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid hypergraph: {0}")]
    InvalidGraph(String),
    #[error("hypergraph has no edges")]
    NoEdges,
    #[error("invalid tensor: {0}")]
    InvalidTensor(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("invalid base: {0}")]
    InvalidBase(String),
    #[error("exact oracle infeasible: {configs:.3e} factor configurations exceed 2^24; use the heuristic oracle")]
    ExactInfeasible { configs: f64 },
    #[error("vertex cap exceeded: graph has {vertices} vertices, cap is {cap}; raise the cap to at least {vertices}")]
    CapExceeded { vertices: usize, cap: usize },
    #[error("enumeration too large: {0}")]
    TooLarge(String),
    #[error("no feasible solution: {0}")]
    Infeasible(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

use crate::ghwt::TagKey;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("node {node} has zero degree; normalized Laplacians are undefined")]
    ZeroDegreeNode { node: usize },

    #[error("graph is not connected ({components} components)")]
    NotConnected { components: usize },

    #[error("eigensolver did not converge within {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("bipartition left one side empty")]
    DegenerateCut,

    #[error("malformed partition tree: {0}")]
    MalformedTree(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("key {0} is fictitious (not present in the dictionary)")]
    FictitiousKey(TagKey),

    #[error("coefficient keys do not match the basis: {0}")]
    KeyMismatch(String),

    #[error("{what} exceeds the supported limit of {limit}")]
    TooLarge { what: String, limit: usize },

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("keys do not form a disjoint tiling: {0}")]
    InvalidTiling(String),

    #[error("invalid cost function: {0}")]
    InvalidCost(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error in {source_name}: {message}")]
    Parse { source_name: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),
}

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { source_name: source_name.into(), message: message.into() }
    }
}

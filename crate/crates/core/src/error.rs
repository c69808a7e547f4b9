use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CelpError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CelpError {
    #[error("node id {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("feature matrix has {found} rows but the graph has {expected} nodes")]
    FeatureRows { expected: usize, found: usize },

    #[error("invalid split fractions: {0}")]
    InvalidFractions(String),

    #[error("graph has {edges} edges, at least {required} required")]
    GraphTooSmall { edges: usize, required: usize },

    #[error("community count {k} invalid for graph with {n} nodes")]
    InvalidCommunityCount { k: usize, n: usize },

    #[error("power iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("missing probability for pair ({0}, {1})")]
    MissingProbability(usize, usize),

    #[error("hop {hop} exceeds sketch maximum {max}")]
    HopOutOfRange { hop: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("embedding of anchor node {0} has zero norm")]
    ZeroNormEmbedding(usize),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("no edges in {0}")]
    NoEdges(PathBuf),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<CelpError>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CelpError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CelpError::Io { path: path.into(), source }
    }
}

/// Tags an error with the pipeline stage that produced it.
pub(crate) trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageContext<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            e @ CelpError::Stage { .. } => e,
            e => CelpError::Stage { stage, source: Box::new(e) },
        })
    }
}

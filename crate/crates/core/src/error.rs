use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("mesh is empty")]
    EmptyMesh,

    #[error("topology error: {0}")]
    Topology(String),

    #[error("non-manifold edge ({0}, {1}) borders {2} faces")]
    NonManifoldEdge(usize, usize, usize),

    #[error("singular system: interior vertex {vertex} has no usable neighbours")]
    SingularSystem { vertex: usize },

    #[error("solver did not converge: relative residual {residual:e} after {iterations} iterations")]
    NoConvergence { residual: f64, iterations: usize },

    #[error("flipped or degenerate triangle {face} in parameter domain")]
    FlippedFace { face: usize },

    #[error("query point ({0}, {1}) lies outside the unit disk")]
    OutOfDomain(f64, f64),

    #[error("query point ({0}, {1}) falls in an uncovered gap of the triangulation")]
    Uncovered(f64, f64),

    #[error("label error: {0}")]
    Label(String),

    #[error("region {0}: {1}")]
    Region(u32, String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("streamline {index}: {reason}")]
    Streamline { index: usize, reason: String },

    #[error("k mismatch: {0} vs {1} points")]
    PointCountMismatch(usize, usize),

    #[error("time series: {0}")]
    TimeSeries(String),

    #[error("overlay: {0}")]
    Overlay(String),

    #[error("scene: {0}")]
    Scene(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

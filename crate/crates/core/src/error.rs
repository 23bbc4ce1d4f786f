use thiserror::Error;

/// Errors raised across the localization pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("graph is disconnected: node {from} cannot reach node {to}")]
    GraphDisconnected { from: usize, to: usize },

    #[error("at least 3 anchors are required, got {found}")]
    InsufficientAnchors { found: usize },

    #[error("anchors are collinear in both frames; reflection is undetermined")]
    DegenerateAnchors,

    #[error("unsupported distance mode: {0}")]
    UnsupportedMode(String),

    #[error("no connected deployment after {attempts} attempts (range {range}, {anchors} anchors)")]
    InfeasibleConfiguration {
        attempts: usize,
        range: f64,
        anchors: usize,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

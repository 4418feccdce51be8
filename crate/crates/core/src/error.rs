use thiserror::Error;

/// Errors shared across the toolkit.
#[derive(Debug, Error)]
pub enum MmsError {
    #[error("invalid space: {0}")]
    InvalidSpace(String),
    #[error("unknown vertex id `{0}`")]
    UnknownVertex(String),
    #[error("vertices `{0}` and `{1}` are disconnected")]
    Disconnected(String, String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("curve family is empty")]
    EmptyFamily,
    #[error("density has no value for edge {0}")]
    MissingEdgeValue(usize),
    #[error("density sequence is inadmissible: {0}")]
    InadmissibleSequence(String),
    #[error("family is not product-structured: {0}")]
    NotProductStructured(String),
    #[error("smoothing scale too small: eps = {eps}, need at least {min}")]
    EpsTooSmall { eps: f64, min: f64 },
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("LP solver failed: {0}")]
    Solver(String),
    #[error("pencil construction failed: {0}")]
    Pencil(String),
    #[error("sequence audit failed: {0}")]
    Audit(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MmsError>;

use thiserror::Error;

/// Errors raised by path arithmetic, sampling and distance estimation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("cannot combine piecewise-linear and piecewise-constant paths")]
    MixedKinds,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("size mismatch: {left} vs {right} samples (resample one side explicitly)")]
    SizeMismatch { left: usize, right: usize },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error(
        "ensemble size {size} exceeds assignment cap {cap}; enable chunked averaging to split into blocks"
    )]
    CapExceeded { size: usize, cap: usize },

    #[error("recursion depth {depth} exceeded bound {bound} at n = {n}")]
    Divergence { n: usize, depth: usize, bound: usize },

    #[error("coefficient sampler at n = {n} kept emitting index n ({rejections} rejections)")]
    ImproperSampler { n: usize, rejections: usize },

    #[error("coefficient sampler at n = {n} emitted out-of-range index {index}")]
    InvalidIndex { n: usize, index: usize },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

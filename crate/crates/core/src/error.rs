use thiserror::Error;

/// Errors produced anywhere in the controller, estimators or simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: argument out of domain ({detail})")]
    Domain { op: &'static str, detail: String },

    #[error("temperature field is singular at the heat source (r = 0)")]
    Singularity,

    #[error("covariance square root failed: {0}")]
    Decomposition(String),

    #[error("process/measurement function returned a non-finite value at sigma point {index}")]
    Propagation { index: usize },

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("truncation interval for state {index} holds no probability mass")]
    Truncation { index: usize },

    #[error("filter diverged: covariance trace {trace:e} exceeds ceiling {ceiling:e}")]
    Divergence { trace: f64, ceiling: f64 },

    #[error("no pixel above the {threshold} degC threshold")]
    NoDetection { threshold: f64 },

    #[error("position {x} m lies outside the phantom [0, {length}] m")]
    OutOfRange { x: f64, length: f64 },

    #[error("model evaluation failed at v = {velocity}: {source}")]
    Model {
        velocity: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("velocity optimization failed: {0}")]
    Optimization(String),

    #[error("metric undefined: {0}")]
    Metric(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        op,
        detail: detail.into(),
    }
}

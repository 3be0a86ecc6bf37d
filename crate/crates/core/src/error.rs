use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A derived exponent or parameter left its admissible range at `point`.
    #[error("range error at {point:?}: {message}")]
    Range { point: Vec<f64>, message: String },

    #[error("no grid node falls inside the region")]
    EmptyRegion,

    #[error("bracket not established after {doublings} doublings")]
    Convergence { doublings: usize },

    #[error("norm exceeded the overflow threshold ({value:e})")]
    OverflowToInfinity { value: f64 },

    #[error("hypothesis failure: {0}")]
    HypothesisFailure(String),

    #[error("spec mismatch: {0}")]
    SpecMismatch(String),

    #[error("operator expects {expected} arguments, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("invalid descriptor: {0}")]
    Descriptor(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn range(point: &[f64], message: impl Into<String>) -> Self {
        Error::Range {
            point: point.to_vec(),
            message: message.into(),
        }
    }
}

use thiserror::Error;

/// Errors raised by carrier arithmetic, function evaluation and the constructions.
#[derive(Debug, Error)]
pub enum JensenError {
    #[error("invalid element: {0}")]
    InvalidElement(String),

    #[error("lattice overflow: {0}")]
    Overflow(String),

    /// A tabulated function was queried outside the set it is tabulated on.
    #[error("element {0} lies outside the tabulated domain")]
    OutOfDomain(String),

    #[error("capability error: {0}")]
    Capability(String),

    #[error("no convergence within {iterations} iterations (last difference {last:e})")]
    NonConvergence {
        iterations: usize,
        last: f64,
        trace: Vec<f64>,
    },

    #[error("malformed carrier: {0}")]
    MalformedCarrier(String),

    #[error("carrier has no neutral element")]
    NoNeutral,

    #[error("malformed function: {0}")]
    MalformedFunction(String),

    #[error("incompatible specification: {0}")]
    Incompatible(String),

    #[error("non-finite value at {0}")]
    NonFinite(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = JensenError> = std::result::Result<T, E>;

impl JensenError {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            JensenError::InvalidElement(_) => "invalid_element",
            JensenError::Overflow(_) => "overflow",
            JensenError::OutOfDomain(_) => "out_of_domain",
            JensenError::Capability(_) => "capability",
            JensenError::NonConvergence { .. } => "non_convergence",
            JensenError::MalformedCarrier(_) => "malformed_carrier",
            JensenError::NoNeutral => "no_neutral",
            JensenError::MalformedFunction(_) => "malformed_function",
            JensenError::Incompatible(_) => "incompatible",
            JensenError::NonFinite(_) => "non_finite",
            JensenError::Io { .. } => "io",
            JensenError::Json { .. } => "json",
        }
    }
}

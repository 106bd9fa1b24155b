use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// An iterative method stopped without meeting its tolerance. `state`
    /// carries whatever the solver had (bracket, iterate) for diagnosis.
    #[error("numeric failure: {message} ({state})")]
    NumericFailure { message: String, state: String },

    #[error("divergent quantity: {0}")]
    Divergence(String),

    #[error("supercritical input: integral {mu} is not below 1")]
    Supercritical { mu: f64 },

    #[error("Neumann series does not contract: measured norm {norm}")]
    SeriesDivergence { norm: f64 },

    #[error("inconsistent bracket: lower {lower} exceeds upper {upper}")]
    InconsistentBracket { lower: f64, upper: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("checksum mismatch: header says {expected}, data hashes to {found}")]
    Checksum { expected: String, found: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

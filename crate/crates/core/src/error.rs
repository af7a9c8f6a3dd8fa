use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("graph has no edges")]
    NoEdges,

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NotConverged { iterations: usize, estimate: f64 },

    #[error("message {index} left its payload domain: {message}")]
    NumericDomain { index: usize, message: String },

    #[error("singular update on message {index}: denominator modulus below 1e-14")]
    SingularUpdate { index: usize },

    #[error("input graph contains a cycle")]
    NotAForest,

    #[error("{what}: {found} exceeds the limit of {limit}")]
    CapExceeded {
        what: String,
        limit: usize,
        found: usize,
    },

    #[error("graph generation failed: {0}")]
    GenerationFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn check_probability(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} = {p} is outside [0, 1]"
        )))
    }
}

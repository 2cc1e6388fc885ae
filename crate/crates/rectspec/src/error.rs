use thiserror::Error;

/// Errors shared across the tensor, solver, and front-end layers.
///
/// Index values carried in messages are 1-based, matching the text formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: tensor is ({n}, {m})-dimensional, vector pair is ({got_n}, {got_m})")]
    Dimension {
        n: usize,
        m: usize,
        got_n: usize,
        got_m: usize,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("regime error: xi = {xi} but {required}")]
    Regime { xi: f64, required: &'static str },

    #[error("structure hypothesis failed: {hypothesis}")]
    Structure { hypothesis: &'static str },

    #[error("unsupported order ({r}, {s}): {required}")]
    UnsupportedOrder {
        r: usize,
        s: usize,
        required: &'static str,
    },

    #[error("instance too large: {0}")]
    Scale(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

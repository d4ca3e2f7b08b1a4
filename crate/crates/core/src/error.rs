use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// `eta` has a pole on the real axis when the mechanical damping is zero.
    #[error("domain error: mechanical susceptibility has a pole at delta = {delta}")]
    Domain { delta: f64 },

    #[error("singular response at delta = {delta} (|f| = {magnitude:e})")]
    SingularResponse { delta: f64, magnitude: f64 },

    #[error("integration escaped at t = {time} us (|b| = {magnitude:e})")]
    Divergence { time: f64, magnitude: f64 },

    #[error("integration exceeded {0} steps")]
    StepLimit(usize),

    #[error("step size underflow at t = {0} us")]
    StepUnderflow(f64),

    #[error("demodulation window too short: {0}")]
    WindowTooShort(String),

    #[error("demodulation did not converge: residual {residual:e} exceeds {limit:e}")]
    NotConverged { residual: f64, limit: f64 },

    #[error("bracket invalid: leading real part is {low:e} at low end and {high:e} at high end")]
    BracketInvalid { low: f64, high: f64 },

    #[error("every point of the sweep is singular")]
    AllSingular,

    #[error("config line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("config line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("config line {line}: value for `{key}` needs a unit suffix")]
    MissingUnit { line: usize, key: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

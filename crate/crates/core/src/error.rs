use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown dispersion form `{form}`")]
    UnknownForm { line: usize, form: String },

    #[error("invalid material: {0}")]
    Validation(String),

    #[error("unknown axis `{0}`")]
    UnknownAxis(String),

    #[error("wavelength {wavelength_um} um outside valid range [{lo}, {hi}] um of axis {axis}")]
    OutOfRange {
        axis: String,
        wavelength_um: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("no root: {0}")]
    NoRoot(String),

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub(crate) fn invalid(message: impl Into<String>) -> Error {
    Error::InvalidInput(message.into())
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate quaternion: norm {norm:e} is too small to normalize")]
    DegenerateQuaternion { norm: f64 },

    #[error("quaternion norm {norm} is too far from one")]
    NotUnit { norm: f64 },

    #[error("{0} contains a non-finite entry")]
    NonFinite(&'static str),

    #[error("quaternion rate is not tangent to the sphere: qᵀq̇ = {dot:e}")]
    TangencyViolation { dot: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical divergence at t = {t}: ‖ω‖ = {omega_norm:e}")]
    NumericalDivergence { t: f64, omega_norm: f64 },

    #[error("history of {available} s is shorter than the {window} s window")]
    InsufficientHistory { available: f64, window: f64 },

    #[error("no records to summarize")]
    EmptyRecords,
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

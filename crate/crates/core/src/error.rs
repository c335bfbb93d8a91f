use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("field mismatch: {0}")]
    FieldMismatch(String),

    #[error("boundary guard tripped at t = {t}: |{field}| reached {ratio:.3e} of its peak at the domain edge")]
    BoundaryGuard { field: &'static str, t: f64, ratio: f64 },

    #[error("non-finite value in {field} at t = {t}")]
    NonFinite { field: &'static str, t: f64 },

    #[error("unitarity violated: |beta| = {0} exceeds 1")]
    Unitarity(f64),

    #[error("adiabaticity violated: |Omega23/Delta| = {ratio:.3} (must stay below {limit}); increase Delta")]
    Adiabaticity { ratio: f64, limit: f64 },

    #[error("signal-to-noise ratio undefined: input quadrature means are both zero")]
    ZeroMean,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed snapshot {path}: {reason}")]
    Snapshot { path: PathBuf, reason: String },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for the guard errors raised by the integrator.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BoundaryGuard { .. } | Error::NonFinite { .. } | Error::Unitarity(_)
        )
    }
}

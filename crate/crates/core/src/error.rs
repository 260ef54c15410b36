use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("domain error: {0}")]
    Domain(String),

    /// |psi|^2 fell to or below the node threshold; guide velocities are undefined there.
    #[error("wave function node near particle {particle}: rho = {rho:.3e} <= node_epsilon = {threshold:.3e}")]
    NodeProximity {
        particle: usize,
        rho: f64,
        threshold: f64,
    },

    #[error("integration failed at sigma = {sigma}: {detail}")]
    Integration { sigma: f64, detail: String },

    #[error("rejection acceptance rate {rate:.3e} is below 1e-4; use the metropolis sampler instead")]
    EnvelopeTooLoose { rate: f64 },

    #[error("rejection envelope {envelope:.6e} was exceeded by rho = {rho:.6e}; refine the envelope scan")]
    EnvelopeExceeded { envelope: f64, rho: f64 },

    #[error("edge loss {edge_loss:.4} >= 0.05: test is inconclusive, enlarge the sampling box or shorten the span")]
    InconclusiveDomain { edge_loss: f64 },

    #[error("single-time reduction not justified: clock precision epsilon = {epsilon} does not exceed offset spread Lambda = {lambda}")]
    ReductionNotJustified { lambda: f64, epsilon: f64 },

    #[error("{path}: field `{field}`: {message}")]
    Scenario {
        path: PathBuf,
        field: String,
        message: String,
    },

    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

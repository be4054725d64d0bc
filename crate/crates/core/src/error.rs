use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate link: drone and user coincide (r = 0, h = 0)")]
    DegenerateLink,

    #[error("invalid link geometry: r = {horizontal}, h = {altitude}")]
    InvalidLink { horizontal: f64, altitude: f64 },

    #[error("no active drone to serve users")]
    NoServer,

    #[error("drone {0} is not an active member of the placement")]
    InactiveDrone(usize),

    #[error(
        "infeasible target rate: B*eta = {capacity_bps} bit/s cannot carry R = {target_rate_bps} bit/s"
    )]
    InfeasibleRate {
        capacity_bps: f64,
        target_rate_bps: f64,
    },

    #[error("invalid value at `{path}`: {reason}")]
    Invalid { path: String, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub(crate) fn invalid(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

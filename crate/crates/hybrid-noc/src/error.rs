use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    #[error("link infeasible at {length_mm} mm: laser power {laser_mw:.3e} mW exceeds cap {cap_mw} mW")]
    Infeasible {
        length_mm: f64,
        laser_mw: f64,
        cap_mw: f64,
    },

    #[error("no route from {src} to {dst}")]
    Unreachable { src: usize, dst: usize },

    #[error("missing calibration entry for {0}")]
    MissingCalibration(String),

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },

    #[error("simulation did not drain within {cycles} cycles ({in_flight} packets in flight, {buffered} flits buffered)")]
    Timeout {
        cycles: u64,
        in_flight: usize,
        buffered: usize,
    },

    #[error("simulation stalled at cycle {cycle} ({in_flight} packets in flight, {buffered} flits buffered)")]
    Stalled {
        cycle: u64,
        in_flight: usize,
        buffered: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Config(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used in CLI error lines.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Invalid { .. } => "invalid",
            Error::Infeasible { .. } => "infeasible",
            Error::Unreachable { .. } => "unreachable",
            Error::MissingCalibration(_) => "calibration",
            Error::Parse { .. } => "parse",
            Error::Timeout { .. } => "timeout",
            Error::Stalled { .. } => "stalled",
            Error::Io { .. } => "io",
            Error::Config(_) => "config",
            Error::Csv(_) => "csv",
        }
    }
}

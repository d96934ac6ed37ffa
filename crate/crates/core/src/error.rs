//! Crate-wide error type.

use thiserror::Error;

/// Errors returned by simulator operations.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates an invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A config file could not be parsed.
    #[error("parse error in {file} line {line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    /// A parameter is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Echo receive time precedes the emit time.
    #[error("time ordering violated: tau1 ({tau1} s) < tau0 ({tau0} s)")]
    TimeOrdering { tau0: f64, tau1: f64 },

    /// An attack surface name is not present in the coupling channel.
    #[error("unknown attack surface: {0}")]
    UnknownSurface(String),

    /// Two spoof targets map onto the same ray.
    #[error("spoof targets conflict on ray (cycle {cycle}, channel {channel})")]
    RayConflict { cycle: u32, channel: u16 },

    /// The attacker's latency cannot be folded into the schedule.
    #[error("infeasible synchronization: {0}")]
    Infeasible(String),

    /// Two point clouds cannot be compared.
    #[error("comparison error: {0}")]
    Comparison(String),

    /// The Hausdorff distance is undefined for an empty cloud.
    #[error("Hausdorff distance undefined: {0} cloud has no valid points")]
    EmptyCloud(&'static str),

    /// A binary point cloud file is malformed.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A per-slot constraint that a decision violated.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Infeasibility {
    #[error("fog node {node} hosts {hosted} services, capacity is {capacity}")]
    Capacity {
        node: usize,
        hosted: u32,
        capacity: usize,
    },
    #[error("fog node {node} consumes {energy_wh} Wh, per-slot cap is {cap_wh} Wh")]
    EnergyCap {
        node: usize,
        energy_wh: f64,
        cap_wh: f64,
    },
    #[error("total service delay {delay_s} s exceeds the per-slot cap {cap_s} s")]
    DelayCap { delay_s: f64, cap_s: f64 },
    #[error("admission fraction {value} of fog node {node} is outside [0, 1]")]
    Admission { node: usize, value: f64 },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("scenario generation failed after {attempts} attempts: {reason}")]
    Scenario { attempts: u32, reason: String },

    #[error("slot {slot}: infeasible decision: {source}")]
    Infeasible {
        slot: usize,
        #[source]
        source: Infeasibility,
    },

    #[error("search space of {size} hosting profiles exceeds the enumeration cap {cap}")]
    SearchSpace { size: f64, cap: f64 },

    #[error("improper coloring: fog nodes {0} and {1} share color {2} but are in each other's blanket")]
    ImproperColoring(usize, usize, usize),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

use std::process::ExitCode;

use thiserror::Error;

/// Everything that ends a command early, split by who is at fault.
#[derive(Debug, Error)]
pub enum Failure {
    /// Bad flags, unreadable input, or an instance the algorithms cannot take.
    #[error("{0}")]
    Config(String),
    /// An algorithm broke one of its own guarantees.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            Failure::Config(_) => ExitCode::from(2),
            Failure::Internal(_) => ExitCode::from(3),
        }
    }
}

impl From<mec_placer::Error> for Failure {
    fn from(e: mec_placer::Error) -> Self {
        use mec_placer::Error as E;
        match e {
            E::InfeasiblePlacement(_) | E::CapacityExceeded { .. } | E::NotANeighbor { .. } => {
                Failure::Internal(e.to_string())
            }
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

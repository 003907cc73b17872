use thiserror::Error;

use crate::clustering::ClusterError;

/// Failure of a clustering run or of its configuration.
#[derive(Debug, Error, PartialEq)]
pub enum RunError {
    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("{k} clusters requested but the data has only {n} points")]
    TooManyClusters { k: usize, n: usize },
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

impl RunError {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Self::InvalidConfig {
            field,
            reason: reason.into(),
        }
    }
}

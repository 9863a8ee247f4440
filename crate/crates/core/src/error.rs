use alloc::boxed::Box;
use alloc::string::String;

use crate::graph::NodeId;

pub type Result<T> = core::result::Result<T, Error>;

/// Phase of a network step in which a per-node operation failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Incremental,
    Spatial,
}

impl core::fmt::Display for Phase {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Phase::Incremental => f.write_str("incremental"),
            Phase::Spatial => f.write_str("spatial"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("node {node} is out of range 1..={count}")]
    InvalidNode { node: NodeId, count: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("observation has regressor of dimension {found}, model order is {expected}")]
    InvalidObservation { expected: usize, found: usize },

    #[error("regressor information matrix is numerically singular (condition estimate {condition:e})")]
    SingularStatistics { condition: f64 },

    #[error("invalid statistics: {0}")]
    InvalidStatistics(String),

    #[error("degenerate rank-one update (denominator {denominator:e})")]
    DegenerateUpdate { denominator: f64 },

    #[error("node {node}: no contribution from neighbour {missing}")]
    IncompleteNeighbourhood { node: NodeId, missing: NodeId },

    #[error("node {node}: weights sum to {sum}, expected 1")]
    InvalidWeights { node: NodeId, sum: f64 },

    #[error("no connected graph after {attempts} draws")]
    Disconnected { attempts: usize },

    #[error("node {node}, {phase} phase: {source}")]
    Node {
        node: NodeId,
        phase: Phase,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Strips node/phase annotations.
    pub fn root(&self) -> &Error {
        match self {
            Error::Node { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures caused by the numerics rather than by the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self.root(),
            Error::SingularStatistics { .. } | Error::DegenerateUpdate { .. } | Error::InvalidStatistics(_)
        )
    }
}

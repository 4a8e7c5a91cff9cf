//! Error types shared across the crate.

use thiserror::Error;

use crate::engine::DecodeResult;
use crate::types::NodeId;

/// Usage and validation errors from the in-memory search structures.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is already on the frontier")]
    DuplicateEntry(NodeId),
    #[error("duplicate surface {0:?} in vocabulary")]
    DuplicateSurface(String),
    #[error("empty surface for a non-special token")]
    EmptySurface,
    #[error("unknown surface {0:?}")]
    UnknownSurface(String),
    #[error("step log-probability must be <= 0, got {0}")]
    PositiveLogProb(f64),
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("distribution mass {sum} is not 1 within tolerance {tolerance}")]
    BadNormalization { sum: f64, tolerance: f64 },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
}

/// Failures raised by model backends.
#[derive(Debug, Error)]
pub enum ModelError {
    /// Connection-level failure; safe to retry.
    #[error("transport failure for {endpoint}: {message}")]
    Transport { endpoint: String, message: String },
    /// The peer answered but violated the wire contract.
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("invalid trie spec at {path}: {message}")]
    TrieSpec { path: String, message: String },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("batch of {got} prefixes exceeds the configured max of {max}")]
    BatchTooLarge { got: usize, max: usize },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl ModelError {
    /// Whether the failure is transient and the same call may be retried.
    pub fn is_retriable(&self) -> bool {
        matches!(self, ModelError::Transport { .. })
    }
}

/// A decode run failed part-way; whatever was found so far is attached.
#[derive(Debug, Error)]
#[error("decode failed after exploring {} nodes: {source}", partial.explored_count)]
pub struct DecodeError {
    #[source]
    pub source: ModelError,
    pub partial: Box<DecodeResult>,
}

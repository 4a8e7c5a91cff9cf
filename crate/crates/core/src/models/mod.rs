//! Model backends behind the [`SequenceModel`] boundary.
//!
//! All backends answer batched prefix queries and are deterministic with
//! respect to the prefix. The remote client inherits determinism only
//! from the server it points at.

use crate::error::ModelError;
use crate::types::{TokenId, Vocabulary};

pub mod ngram;
pub mod remote;
pub mod synth;
pub mod trie;

pub use ngram::NGramModel;
pub use remote::{RemoteModel, WireRequest, WireResponse};
pub use trie::{TrieModel, TrieSpec, TrieSpecNode};

/// One entry of a sparse next-token distribution: `(token, ln p)`.
pub type TokenLogProb = (TokenId, f64);

/// Abstract next-token log-probability provider.
///
/// `next_logprobs` answers one batched query: for each prefix (token ids
/// starting with BOS) it returns a sparse list covering every token whose
/// probability clears the backend's floor. Distributions may drop a sparse
/// tail, so per prefix `sum(exp(logprob)) <= 1 + 1e-6`.
pub trait SequenceModel: Send + Sync {
    fn vocabulary(&self) -> &Vocabulary;

    fn next_logprobs(&self, prefixes: &[&[TokenId]]) -> Result<Vec<Vec<TokenLogProb>>, ModelError>;

    /// Single-prefix convenience wrapper over the batched query.
    fn next_logprobs_one(&self, prefix: &[TokenId]) -> Result<Vec<TokenLogProb>, ModelError> {
        Ok(self
            .next_logprobs(&[prefix])?
            .pop()
            .expect("batch of one yields one distribution"))
    }
}

impl<M: SequenceModel + ?Sized> SequenceModel for std::sync::Arc<M> {
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }

    fn next_logprobs(&self, prefixes: &[&[TokenId]]) -> Result<Vec<Vec<TokenLogProb>>, ModelError> {
        (**self).next_logprobs(prefixes)
    }
}

/// Mass tolerance for distribution checks.
pub const MASS_TOLERANCE: f64 = 1e-6;

/// Checks that a sparse distribution is well-formed: finite non-positive
/// logprobs, no duplicate tokens, and total mass at most `1 + 1e-6`.
pub fn validate_distribution(dist: &[TokenLogProb]) -> Result<(), ModelError> {
    let mut seen = std::collections::HashSet::new();
    let mut mass = 0.0;
    for &(token, logprob) in dist {
        if !seen.insert(token) {
            return Err(ModelError::Protocol(format!(
                "token {token} appears twice in a distribution"
            )));
        }
        if !logprob.is_finite() || logprob > MASS_TOLERANCE {
            return Err(ModelError::Protocol(format!(
                "log-probability {logprob} for token {token} is out of range"
            )));
        }
        mass += logprob.exp();
    }
    if mass > 1.0 + MASS_TOLERANCE {
        return Err(ModelError::Protocol(format!(
            "distribution mass {mass} exceeds 1"
        )));
    }
    Ok(())
}

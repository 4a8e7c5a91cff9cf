//! HTTP client for out-of-process models.
//!
//! Wire contract: `POST` a JSON body `{ "prefixes": [[token ids]],
//! "request_id": "..." }`; the server answers `{ "logprobs":
//! [[[token_id, logprob], ...]], "request_id": "..." }` with batch order
//! preserved and the request id echoed back.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::types::{TokenId, Vocabulary};

use super::{validate_distribution, SequenceModel, TokenLogProb};

/// Request body of the wire protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireRequest {
    pub prefixes: Vec<Vec<TokenId>>,
    pub request_id: String,
}

/// Response body of the wire protocol.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireResponse {
    pub logprobs: Vec<Vec<(TokenId, f64)>>,
    pub request_id: String,
}

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);
pub const DEFAULT_MAX_BATCH: usize = 64;

/// Client handle for a model served over the wire protocol.
///
/// Deterministic decoding only holds when the server itself is
/// deterministic; the client merely preserves batch order.
pub struct RemoteModel {
    endpoint: String,
    vocab: Vocabulary,
    max_batch: usize,
    agent: ureq::Agent,
    next_request: AtomicU64,
}

impl RemoteModel {
    pub fn new(endpoint: impl Into<String>, vocab: Vocabulary) -> Self {
        Self::with_options(endpoint, vocab, DEFAULT_TIMEOUT, DEFAULT_MAX_BATCH)
    }

    pub fn with_options(
        endpoint: impl Into<String>,
        vocab: Vocabulary,
        timeout: Duration,
        max_batch: usize,
    ) -> Self {
        RemoteModel {
            endpoint: endpoint.into(),
            vocab,
            max_batch,
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
            next_request: AtomicU64::new(0),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn max_batch(&self) -> usize {
        self.max_batch
    }

    /// One request on the wire. The batch must fit `max_batch`; an empty
    /// batch returns immediately without touching the network.
    pub fn remote_next(
        &self,
        prefixes: &[&[TokenId]],
    ) -> Result<Vec<Vec<TokenLogProb>>, ModelError> {
        if prefixes.is_empty() {
            return Ok(Vec::new());
        }
        if prefixes.len() > self.max_batch {
            return Err(ModelError::BatchTooLarge {
                got: prefixes.len(),
                max: self.max_batch,
            });
        }
        let request_id = format!("req-{}", self.next_request.fetch_add(1, Ordering::Relaxed));
        let request = WireRequest {
            prefixes: prefixes.iter().map(|p| p.to_vec()).collect(),
            request_id: request_id.clone(),
        };
        let response = self
            .agent
            .post(&self.endpoint)
            .set("content-type", "application/json")
            .send_string(&serde_json::to_string(&request).expect("requests serialize"))
            .map_err(|err| match err {
                ureq::Error::Status(code, _) => {
                    ModelError::Protocol(format!("server answered HTTP {code}"))
                }
                ureq::Error::Transport(t) => ModelError::Transport {
                    endpoint: self.endpoint.clone(),
                    message: t.to_string(),
                },
            })?;
        let body: WireResponse = response
            .into_json()
            .map_err(|e| ModelError::Protocol(format!("malformed response body: {e}")))?;

        if body.request_id != request_id {
            return Err(ModelError::Protocol(format!(
                "request id mismatch: sent {request_id:?}, got {:?}",
                body.request_id
            )));
        }
        if body.logprobs.len() != prefixes.len() {
            return Err(ModelError::Protocol(format!(
                "batch of {} prefixes answered with {} distributions",
                prefixes.len(),
                body.logprobs.len()
            )));
        }
        for dist in &body.logprobs {
            validate_distribution(dist)?;
        }
        Ok(body.logprobs)
    }
}

impl SequenceModel for RemoteModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    /// Batches larger than `max_batch` are split into consecutive
    /// requests, order preserved.
    fn next_logprobs(&self, prefixes: &[&[TokenId]]) -> Result<Vec<Vec<TokenLogProb>>, ModelError> {
        let mut out = Vec::with_capacity(prefixes.len());
        for chunk in prefixes.chunks(self.max_batch.max(1)) {
            out.extend(self.remote_next(chunk)?);
        }
        Ok(out)
    }
}

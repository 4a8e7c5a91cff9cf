//! Add-k smoothed n-gram language models with back-off.
//!
//! A desk-scale stand-in for neural models: trained from plain text in
//! one pass, deterministic, and fast enough to drive timing studies.

use std::collections::HashMap;
use std::path::Path;

use crate::error::ModelError;
use crate::types::{TokenId, Vocabulary, BOS, EOS};

use super::{SequenceModel, TokenLogProb};

#[derive(Debug, Default, Clone)]
struct ContextCounts {
    total: u64,
    counts: HashMap<TokenId, u64>,
}

/// N-gram model with add-k smoothing.
///
/// Seen contexts are smoothed over the full vocabulary when `add_k > 0`;
/// unseen contexts back off to the (n-1)-gram recursively down to the
/// unigram, which is always populated.
#[derive(Debug, Clone)]
pub struct NGramModel {
    vocab: Vocabulary,
    order: usize,
    add_k: f64,
    /// Next-token counts keyed by context suffix, one map entry per
    /// observed context of every length `0..order`.
    continuations: HashMap<Vec<TokenId>, ContextCounts>,
    /// Tokens with probability below this are dropped from query results.
    floor: f64,
}

impl NGramModel {
    /// Trains from corpus lines. Lines are lowercased and whitespace
    /// split (the same tokenization the metrics use); each becomes
    /// `BOS w1 .. wn EOS`.
    pub fn train<'a, I>(lines: I, order: usize, add_k: f64) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if order < 1 {
            return Err(ModelError::Protocol(format!(
                "n-gram order must be >= 1, got {order}"
            )));
        }
        if !(add_k >= 0.0 && add_k.is_finite()) {
            return Err(ModelError::Protocol(format!(
                "add-k constant must be finite and >= 0, got {add_k}"
            )));
        }

        let mut sequences: Vec<Vec<TokenId>> = Vec::new();
        let mut surfaces: Vec<String> = Vec::new();
        let mut ids: HashMap<String, TokenId> = HashMap::new();
        for line in lines {
            let words: Vec<String> = line.split_whitespace().map(str::to_lowercase).collect();
            if words.is_empty() {
                continue;
            }
            let mut seq = Vec::with_capacity(words.len() + 2);
            seq.push(BOS);
            for word in words {
                let next_id = (surfaces.len() + 2) as TokenId;
                let id = *ids.entry(word.clone()).or_insert_with(|| {
                    surfaces.push(word);
                    next_id
                });
                seq.push(id);
            }
            seq.push(EOS);
            sequences.push(seq);
        }
        if sequences.is_empty() {
            return Err(ModelError::EmptyCorpus);
        }
        let vocab = Vocabulary::new(surfaces).map_err(ModelError::Core)?;

        let mut continuations: HashMap<Vec<TokenId>, ContextCounts> = HashMap::new();
        for seq in &sequences {
            for target_at in 1..seq.len() {
                for ctx_len in 0..order {
                    if ctx_len > target_at {
                        break;
                    }
                    let ctx = seq[target_at - ctx_len..target_at].to_vec();
                    let entry = continuations.entry(ctx).or_default();
                    entry.total += 1;
                    *entry.counts.entry(seq[target_at]).or_insert(0) += 1;
                }
            }
        }

        Ok(NGramModel {
            vocab,
            order,
            add_k,
            continuations,
            floor: 0.0,
        })
    }

    pub fn from_corpus_path(
        path: impl AsRef<Path>,
        order: usize,
        add_k: f64,
    ) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)?;
        Self::train(text.lines(), order, add_k)
    }

    /// Drops tokens whose probability is at or below `floor` from query
    /// results.
    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn distribution(&self, prefix: &[TokenId]) -> Vec<TokenLogProb> {
        // longest seen context wins; shorter suffixes are the back-off
        let history = prefix;
        let longest = (self.order - 1).min(history.len());
        let mut counts = None;
        for ctx_len in (0..=longest).rev() {
            let ctx = &history[history.len() - ctx_len..];
            if let Some(found) = self.continuations.get(ctx) {
                counts = Some(found);
                break;
            }
        }
        let counts = counts.expect("the empty context is always populated");

        // candidate tokens: everything but BOS
        let candidates = (self.vocab.len() - 1) as f64;
        let denom = counts.total as f64 + self.add_k * candidates;
        let mut dist = Vec::new();
        for id in 1..self.vocab.len() as TokenId {
            let count = counts.counts.get(&id).copied().unwrap_or(0) as f64;
            let numer = count + self.add_k;
            if numer <= 0.0 {
                continue;
            }
            let p = numer / denom;
            if p > self.floor {
                dist.push((id, p.ln()));
            }
        }
        dist
    }
}

impl SequenceModel for NGramModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_logprobs(&self, prefixes: &[&[TokenId]]) -> Result<Vec<Vec<TokenLogProb>>, ModelError> {
        let mut out = Vec::with_capacity(prefixes.len());
        for prefix in prefixes {
            if prefix.first() != Some(&BOS) {
                return Err(ModelError::Protocol(
                    "prefix must start with BOS".to_string(),
                ));
            }
            out.push(self.distribution(prefix));
        }
        Ok(out)
    }
}

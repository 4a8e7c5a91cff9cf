//! Truncation filters and ancestral sampling.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::engine::DecodeResult;
use crate::error::{CoreError, DecodeError, ModelError};
use crate::models::SequenceModel;
use crate::scoring::{model_score, ScoreMode};
use crate::types::{Hypothesis, NodeArena, TokenId, BOS};

/// A probability together with its token: filters operate on
/// probabilities, not logprobs.
pub type TokenProb = (TokenId, f64);

/// Truncation applied to a next-token distribution before sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TokenFilter {
    /// No truncation.
    None,
    /// Keep the top-probability nucleus of mass `p`.
    Nucleus(f64),
    /// Keep the most typical tokens up to mass `tau`.
    Typical(f64),
}

impl TokenFilter {
    pub fn apply(&self, dist: &[TokenProb]) -> Result<Vec<TokenProb>, CoreError> {
        match *self {
            TokenFilter::None => Ok(dist.to_vec()),
            TokenFilter::Nucleus(p) => nucleus_filter(dist, p),
            TokenFilter::Typical(tau) => typical_filter(dist, tau),
        }
    }
}

const SUM_TOLERANCE: f64 = 1e-6;

fn check_input(dist: &[TokenProb], threshold: f64, name: &str) -> Result<(), CoreError> {
    if dist.is_empty() {
        return Err(CoreError::EmptyDistribution);
    }
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(CoreError::BadConfig(format!(
            "{name} threshold must be in (0, 1], got {threshold}"
        )));
    }
    let sum: f64 = dist.iter().map(|&(_, p)| p).sum();
    if (sum - 1.0).abs() > SUM_TOLERANCE {
        return Err(CoreError::BadNormalization {
            sum,
            tolerance: SUM_TOLERANCE,
        });
    }
    Ok(())
}

fn renormalize(mut kept: Vec<TokenProb>) -> Vec<TokenProb> {
    let mass: f64 = kept.iter().map(|&(_, p)| p).sum();
    for entry in &mut kept {
        entry.1 /= mass;
    }
    kept
}

/// Top-p truncation: keep the smallest prefix of tokens, in descending
/// probability, whose cumulative mass reaches `p`; renormalize.
/// Ties break toward the lower token id.
pub fn nucleus_filter(dist: &[TokenProb], p: f64) -> Result<Vec<TokenProb>, CoreError> {
    check_input(dist, p, "nucleus")?;
    let mut sorted = dist.to_vec();
    sorted.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut kept = Vec::new();
    let mut mass = 0.0;
    for entry in sorted {
        kept.push(entry);
        mass += entry.1;
        if mass >= p - 1e-12 {
            break;
        }
    }
    Ok(renormalize(kept))
}

/// Entropy-based truncation: rank tokens by closeness of their surprisal
/// to the distribution entropy, keep the smallest prefix of mass `tau`,
/// renormalize. Ties break toward the lower token id.
pub fn typical_filter(dist: &[TokenProb], tau: f64) -> Result<Vec<TokenProb>, CoreError> {
    check_input(dist, tau, "typical")?;
    let entropy: f64 = dist
        .iter()
        .filter(|&&(_, p)| p > 0.0)
        .map(|&(_, p)| -p * p.ln())
        .sum();
    let mut ranked: Vec<(f64, TokenProb)> = dist
        .iter()
        .map(|&(token, p)| {
            let surprisal = if p > 0.0 { -p.ln() } else { f64::INFINITY };
            ((surprisal - entropy).abs(), (token, p))
        })
        .collect();
    ranked.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1 .0.cmp(&b.1 .0)));
    let mut kept = Vec::new();
    let mut mass = 0.0;
    for (_, entry) in ranked {
        kept.push(entry);
        mass += entry.1;
        if mass >= tau - 1e-12 {
            break;
        }
    }
    Ok(renormalize(kept))
}

/// Draws `num_samples` sequences by ancestral sampling through `filter`.
///
/// Duplicates are retained in `completed`; the unique count is a metrics
/// concern. Runs are pure functions of (model, filter, seed).
pub fn sample_decode(
    model: &dyn SequenceModel,
    filter: TokenFilter,
    num_samples: usize,
    max_len: u32,
    seed: u64,
) -> Result<DecodeResult, DecodeError> {
    sample_decode_scored(model, filter, num_samples, max_len, seed, ScoreMode::mean())
}

/// [`sample_decode`] with an explicit scoring function for the reported
/// hypothesis scores.
pub fn sample_decode_scored(
    model: &dyn SequenceModel,
    filter: TokenFilter,
    num_samples: usize,
    max_len: u32,
    seed: u64,
    score_mode: ScoreMode,
) -> Result<DecodeResult, DecodeError> {
    let started = std::time::Instant::now();
    let mut result = DecodeResult {
        completed: Vec::new(),
        truncated: Vec::new(),
        explored_count: 0,
        rounds: 0,
        model_batch_calls: 0,
        wall_time: std::time::Duration::ZERO,
        arena: NodeArena::with_root(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = model.vocabulary();

    for _ in 0..num_samples {
        let mut prefix = vec![BOS];
        let mut cum = 0.0;
        let mut last_step = 0.0;
        let mut finished = false;
        while prefix.len() as u32 <= max_len {
            result.model_batch_calls += 1;
            result.rounds += 1;
            let dist = match model.next_logprobs_one(&prefix) {
                Ok(dist) => dist,
                Err(source) => {
                    result.wall_time = started.elapsed();
                    return Err(DecodeError {
                        source,
                        partial: Box::new(result),
                    });
                }
            };
            if dist.is_empty() {
                break; // dead branch: no continuation has mass
            }
            let probs: Vec<TokenProb> = dist.iter().map(|&(t, lp)| (t, lp.exp())).collect();
            let filtered = match filter.apply(&probs) {
                Ok(filtered) => filtered,
                Err(err) => {
                    result.wall_time = started.elapsed();
                    return Err(DecodeError {
                        source: ModelError::Core(err),
                        partial: Box::new(result),
                    });
                }
            };
            let draw: f64 = rng.gen();
            let mut acc = 0.0;
            let mut chosen = filtered[filtered.len() - 1].0;
            for &(token, p) in &filtered {
                acc += p;
                if draw < acc {
                    chosen = token;
                    break;
                }
            }
            // score with the model's own probability, not the filtered one
            let step_logprob = dist
                .iter()
                .find(|&&(t, _)| t == chosen)
                .map(|&(_, lp)| lp)
                .expect("filters only keep supported tokens");
            cum += step_logprob;
            last_step = step_logprob;
            prefix.push(chosen);
            result.explored_count += 1;
            if vocab.is_terminator(chosen) {
                finished = true;
                break;
            }
        }
        let depth = (prefix.len() - 1) as u32;
        let hypothesis = Hypothesis {
            tokens: prefix,
            cum_logprob: cum,
            model_score: if depth == 0 {
                0.0
            } else {
                model_score(score_mode, cum, depth, last_step)
            },
            complete: finished,
            truncated: !finished,
        };
        if finished {
            result.completed.push(hypothesis);
        } else {
            result.truncated.push(hypothesis);
        }
    }
    result.wall_time = started.elapsed();
    Ok(result)
}

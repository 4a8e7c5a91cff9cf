//! Length-synchronous beam decoding and its diverse and stochastic
//! variants.
//!
//! One engine drives all three entry points. Each depth step gathers the
//! candidate continuations of every live beam in one batched model call,
//! then hands them to `diversity_groups` selection waves: wave g ranks
//! the remaining pool by cumulative score minus the Hamming diversity
//! penalty (token counts chosen by earlier waves at this step) and takes
//! its share. With one group and no sampling this is plain beam search;
//! with a zero penalty the waves jointly pick the global top-b, so the
//! grouped variant degrades to plain beam search exactly.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::engine::DecodeResult;
use crate::error::{CoreError, DecodeError, ModelError};
use crate::models::{SequenceModel, TokenLogProb};
use crate::scoring::{model_score, ScoreMode};
use crate::types::{Hypothesis, NodeArena, TokenId, BOS};

use super::sampling::{TokenFilter, TokenProb};

/// Parameters shared by the beam-family decoders.
#[derive(Debug, Clone)]
pub struct BeamConfig {
    pub beam_size: usize,
    pub max_len: u32,
    /// Final ranking objective for completed hypotheses.
    pub score_mode: ScoreMode,
    /// 1 = plain beam search.
    pub diversity_groups: usize,
    /// Hamming penalty weight between groups.
    pub diversity_penalty: f64,
    /// Per-beam candidate truncation for the stochastic variants.
    pub sampling: TokenFilter,
    /// Completions returned after ranking; `None` returns all.
    pub num_return: Option<usize>,
    pub seed: u64,
}

impl BeamConfig {
    pub fn new(beam_size: usize, max_len: u32) -> Self {
        BeamConfig {
            beam_size,
            max_len,
            score_mode: ScoreMode::mean(),
            diversity_groups: 1,
            diversity_penalty: 0.0,
            sampling: TokenFilter::None,
            num_return: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.beam_size < 1 {
            return Err(CoreError::BadConfig("beam size must be >= 1".into()));
        }
        let groups = self.diversity_groups;
        if groups < 1 || groups > self.beam_size {
            return Err(CoreError::BadConfig(format!(
                "diversity groups must be in 1..=beam_size, got {groups}"
            )));
        }
        if groups > 1 && !self.beam_size.is_multiple_of(groups) {
            return Err(CoreError::BadConfig(format!(
                "beam size {} not divisible by {groups} groups",
                self.beam_size
            )));
        }
        match self.sampling {
            TokenFilter::None => {}
            TokenFilter::Nucleus(p) | TokenFilter::Typical(p) => {
                if !(p > 0.0 && p <= 1.0) {
                    return Err(CoreError::BadConfig(format!(
                        "sampling threshold must be in (0, 1], got {p}"
                    )));
                }
            }
        }
        self.score_mode.validate()
    }
}

/// Plain beam search. Requires `sampling = None` and one group.
pub fn beam_search(
    model: &dyn SequenceModel,
    config: &BeamConfig,
) -> Result<DecodeResult, DecodeError> {
    require(config, config.sampling == TokenFilter::None, "beam_search needs sampling = None")?;
    require(config, config.diversity_groups == 1, "beam_search needs one group")?;
    beam_core(model, config)
}

/// Diverse beam search over `diversity_groups > 1` groups.
pub fn diverse_beam_search(
    model: &dyn SequenceModel,
    config: &BeamConfig,
) -> Result<DecodeResult, DecodeError> {
    require(config, config.diversity_groups > 1, "diverse beam search needs > 1 group")?;
    require(config, config.sampling == TokenFilter::None, "diverse beam search needs sampling = None")?;
    beam_core(model, config)
}

/// Beam search whose per-beam candidate pools are drawn multinomially
/// from the filtered distribution instead of taken deterministically.
pub fn beam_sample_decode(
    model: &dyn SequenceModel,
    config: &BeamConfig,
) -> Result<DecodeResult, DecodeError> {
    require(config, config.sampling != TokenFilter::None, "beam-sample needs a filter")?;
    require(config, config.diversity_groups == 1, "beam-sample needs one group")?;
    beam_core(model, config)
}

fn require(config: &BeamConfig, ok: bool, message: &str) -> Result<(), DecodeError> {
    if ok {
        return Ok(());
    }
    Err(DecodeError {
        source: ModelError::Core(CoreError::BadConfig(format!("{message}: {config:?}"))),
        partial: Box::new(empty_result()),
    })
}

#[derive(Debug, Clone)]
struct Beam {
    tokens: Vec<TokenId>,
    cum_logprob: f64,
    last_step: f64,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    beam: usize,
    token: TokenId,
    step_logprob: f64,
}

fn empty_result() -> DecodeResult {
    DecodeResult {
        completed: Vec::new(),
        truncated: Vec::new(),
        explored_count: 0,
        rounds: 0,
        model_batch_calls: 0,
        wall_time: Duration::ZERO,
        arena: NodeArena::with_root(),
    }
}

fn beam_core(model: &dyn SequenceModel, config: &BeamConfig) -> Result<DecodeResult, DecodeError> {
    let started = Instant::now();
    let mut result = empty_result();
    if let Err(err) = config.validate() {
        return Err(DecodeError {
            source: ModelError::Core(err),
            partial: Box::new(result),
        });
    }
    let vocab = model.vocabulary();
    let groups = config.diversity_groups;
    let group_width = config.beam_size / groups;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut beams = vec![Beam {
        tokens: vec![BOS],
        cum_logprob: 0.0,
        last_step: 0.0,
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for depth in 1..=config.max_len {
        if beams.is_empty() {
            break;
        }
        let prefixes: Vec<&[TokenId]> = beams.iter().map(|b| b.tokens.as_slice()).collect();
        result.model_batch_calls += 1;
        result.rounds += 1;
        result.explored_count += beams.len();
        let dists = match model.next_logprobs(&prefixes) {
            Ok(dists) => dists,
            Err(source) => {
                result.wall_time = started.elapsed();
                return Err(DecodeError {
                    source,
                    partial: Box::new(result),
                });
            }
        };

        let mut pool: Vec<Candidate> = Vec::new();
        for (beam_idx, dist) in dists.iter().enumerate() {
            let continuations = match candidate_pool(dist, config, group_width, &mut rng) {
                Ok(continuations) => continuations,
                Err(err) => {
                    result.wall_time = started.elapsed();
                    return Err(DecodeError {
                        source: ModelError::Core(err),
                        partial: Box::new(result),
                    });
                }
            };
            pool.extend(continuations.into_iter().map(|(token, step_logprob)| Candidate {
                beam: beam_idx,
                token,
                step_logprob,
            }));
        }

        // sequential selection waves with the Hamming token penalty
        let mut step_counts: HashMap<TokenId, usize> = HashMap::new();
        let mut next_beams: Vec<Beam> = Vec::new();
        for _ in 0..groups {
            let mut ranked: Vec<(f64, usize)> = pool
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let penalty = if groups > 1 {
                        config.diversity_penalty
                            * *step_counts.get(&c.token).unwrap_or(&0) as f64
                    } else {
                        0.0
                    };
                    (beams[c.beam].cum_logprob + c.step_logprob - penalty, i)
                })
                .collect();
            ranked.sort_unstable_by(|a, b| {
                b.0.total_cmp(&a.0).then_with(|| {
                    let (ca, cb) = (&pool[a.1], &pool[b.1]);
                    ca.beam.cmp(&cb.beam).then_with(|| ca.token.cmp(&cb.token))
                })
            });
            let take: Vec<usize> = ranked.iter().take(group_width).map(|&(_, i)| i).collect();
            for &i in &take {
                let candidate = pool[i];
                let source = &beams[candidate.beam];
                let mut tokens = source.tokens.clone();
                tokens.push(candidate.token);
                let cum = source.cum_logprob + candidate.step_logprob;
                *step_counts.entry(candidate.token).or_insert(0) += 1;
                if vocab.is_terminator(candidate.token) {
                    finished.push(Hypothesis {
                        tokens,
                        cum_logprob: cum,
                        model_score: model_score(
                            config.score_mode,
                            cum,
                            depth,
                            candidate.step_logprob,
                        ),
                        complete: true,
                        truncated: false,
                    });
                } else {
                    next_beams.push(Beam {
                        tokens,
                        cum_logprob: cum,
                        last_step: candidate.step_logprob,
                    });
                }
            }
            // consume selections so later waves cannot re-pick them
            let mut taken: Vec<usize> = take;
            taken.sort_unstable_by(|a, b| b.cmp(a));
            for i in taken {
                pool.swap_remove(i);
            }
        }
        beams = next_beams;
    }

    // beams alive at the cap become truncated hypotheses
    for beam in beams {
        let depth = (beam.tokens.len() - 1) as u32;
        result.truncated.push(Hypothesis {
            model_score: model_score(config.score_mode, beam.cum_logprob, depth, beam.last_step),
            tokens: beam.tokens,
            cum_logprob: beam.cum_logprob,
            complete: false,
            truncated: true,
        });
    }

    finished.sort_by(|a, b| b.model_score.total_cmp(&a.model_score));
    if let Some(cap) = config.num_return {
        finished.truncate(cap);
    }
    result.completed = finished;
    result.wall_time = started.elapsed();
    Ok(result)
}

/// A beam's candidate continuations: the whole sparse distribution for
/// the deterministic decoders, or up to `group_width` distinct
/// multinomial draws through the filter for the stochastic ones.
/// Scores stay in model log-probabilities either way.
fn candidate_pool(
    dist: &[TokenLogProb],
    config: &BeamConfig,
    group_width: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<TokenLogProb>, CoreError> {
    let cleaned: Vec<TokenLogProb> = dist
        .iter()
        .filter(|&&(token, _)| token != BOS)
        .copied()
        .collect();
    if config.sampling == TokenFilter::None || cleaned.is_empty() {
        return Ok(cleaned);
    }
    let probs: Vec<TokenProb> = cleaned.iter().map(|&(t, lp)| (t, lp.exp())).collect();
    let mut remaining = config.sampling.apply(&probs)?;
    let mut picks = Vec::new();
    while picks.len() < group_width && !remaining.is_empty() {
        let mass: f64 = remaining.iter().map(|&(_, p)| p).sum();
        let draw: f64 = rng.gen::<f64>() * mass;
        let mut acc = 0.0;
        let mut chosen = remaining.len() - 1;
        for (i, &(_, p)) in remaining.iter().enumerate() {
            acc += p;
            if draw < acc {
                chosen = i;
                break;
            }
        }
        let (token, _) = remaining.remove(chosen);
        let step_logprob = cleaned
            .iter()
            .find(|&&(t, _)| t == token)
            .map(|&(_, lp)| lp)
            .expect("filters only keep supported tokens");
        picks.push((token, step_logprob));
    }
    Ok(picks)
}

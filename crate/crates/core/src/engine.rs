//! The search drivers: single-node best-first decoding and best-k
//! decoding with parallel exploration, temporal decay, and heap pruning.
//!
//! Both drivers share the same budget ledger: the budget bounds explored
//! (popped-and-expanded) nodes, a round expands one popped group in one
//! batched model call, and completions never occupy frontier slots or
//! count toward the budget.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::time::{Duration, Instant};

use crate::error::{CoreError, DecodeError, ModelError};
use crate::frontier::{Frontier, FrontierEntry, PriorityParams, DEFAULT_CAPACITY};
use crate::models::{SequenceModel, TokenLogProb};
use crate::scoring::{model_score, DecayParams, ScoreMode};
use crate::types::{
    completion_kind, CompletionKind, Hypothesis, NodeArena, NodeId, Round, SearchNode, TokenId,
    BOS,
};

/// Probability floor below which candidate children are discarded.
pub const DEFAULT_CHILD_THRESHOLD: f64 = 0.05;

// ── Configuration ──────────────────────────────────────────────────────

/// Full parameter set for one decode run.
#[derive(Debug, Clone)]
pub struct DecodeConfig {
    /// Group size: nodes popped and batch-expanded per round.
    pub k: usize,
    /// Max explored nodes; the equivalent-beam-size product `b * max_len`.
    pub budget: usize,
    /// Max decoding depth, excluding BOS.
    pub max_len: u32,
    pub score_mode: ScoreMode,
    pub decay: DecayParams,
    /// Probability floor for candidate children (gamma).
    pub child_threshold: f64,
    /// Children kept per expansion; `None` keeps every survivor.
    pub child_cap: Option<usize>,
    pub frontier_capacity: usize,
    /// Termination tokens beyond EOS and the vocabulary's own extras.
    pub extra_terminators: BTreeSet<TokenId>,
    /// Experimental depth bonus weight; leave at 0 outside ablations.
    pub depth_bonus: f64,
}

impl DecodeConfig {
    /// Defaults everything but the group size, budget, and length cap;
    /// the child cap follows the group size.
    pub fn new(k: usize, budget: usize, max_len: u32) -> Self {
        DecodeConfig {
            k,
            budget,
            max_len,
            score_mode: ScoreMode::mean(),
            decay: DecayParams::disabled(),
            child_threshold: DEFAULT_CHILD_THRESHOLD,
            child_cap: Some(k.max(1)),
            frontier_capacity: DEFAULT_CAPACITY,
            extra_terminators: BTreeSet::new(),
            depth_bonus: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if self.k < 1 {
            return Err(CoreError::BadConfig("group size k must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.child_threshold) {
            return Err(CoreError::BadConfig(format!(
                "child threshold must be in [0, 1), got {}",
                self.child_threshold
            )));
        }
        if self.frontier_capacity == 0 {
            return Err(CoreError::BadConfig("frontier capacity must be >= 1".into()));
        }
        self.score_mode.validate()?;
        self.decay.validate()
    }

    fn terminators(&self, vocab_extras: &BTreeSet<TokenId>) -> BTreeSet<TokenId> {
        self.extra_terminators
            .union(vocab_extras)
            .copied()
            .collect()
    }
}

/// Whether a node ends its hypothesis under `config`: its token is EOS
/// or a config-level terminator, or it sits at the length cap. The
/// decoders additionally merge the vocabulary's own extra terminators at
/// run start.
pub fn is_complete(node: &SearchNode, config: &DecodeConfig) -> bool {
    completion_kind(
        node.token,
        node.depth,
        config.max_len,
        &config.extra_terminators,
    ) != CompletionKind::Open
}

// ── Results ────────────────────────────────────────────────────────────

/// Completed hypotheses plus the budget/timing ledger of a run.
#[derive(Debug, Clone)]
pub struct DecodeResult {
    /// True completions, in discovery order; pairwise distinct token
    /// sequences by the tree property.
    pub completed: Vec<Hypothesis>,
    /// Hypotheses force-terminated at the length cap.
    pub truncated: Vec<Hypothesis>,
    /// Nodes popped and expanded. May overshoot the budget by at most
    /// `g - 1` in the final round.
    pub explored_count: usize,
    pub rounds: usize,
    pub model_batch_calls: usize,
    pub wall_time: Duration,
    pub arena: NodeArena,
}

impl DecodeResult {
    fn empty() -> Self {
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

    /// True when the run produced no real completion.
    pub fn incomplete(&self) -> bool {
        self.completed.is_empty()
    }
}

// ── Expansion ──────────────────────────────────────────────────────────

/// Children and completions discovered by expanding one node.
#[derive(Debug)]
pub struct Expansion {
    /// Materialized children, ready to enqueue.
    pub children: Vec<FrontierEntry>,
    pub completed: Vec<Hypothesis>,
    pub truncated: Vec<Hypothesis>,
}

/// Filters a raw next-token distribution: drop tokens under the
/// probability floor, keep at most `cap` of the survivors by probability
/// (ties toward the lower token id).
fn filter_children(
    dist: &[TokenLogProb],
    threshold: f64,
    cap: Option<usize>,
) -> Vec<TokenLogProb> {
    let ln_threshold = if threshold > 0.0 {
        threshold.ln() - 1e-12
    } else {
        f64::NEG_INFINITY
    };
    let mut survivors: Vec<TokenLogProb> = dist
        .iter()
        .filter(|&&(token, logprob)| token != BOS && logprob >= ln_threshold)
        .copied()
        .collect();
    survivors.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    if let Some(cap) = cap {
        survivors.truncate(cap);
    }
    survivors
}

/// Routes one node's filtered children: completions are recorded
/// immediately and never enter the frontier; open children are appended
/// to the arena with the current round as their discovery time.
fn route_children(
    arena: &mut NodeArena,
    parent_id: NodeId,
    dist: &[TokenLogProb],
    config: &DecodeConfig,
    terminators: &BTreeSet<TokenId>,
    now: Round,
) -> Result<Expansion, CoreError> {
    let survivors = filter_children(dist, config.child_threshold, config.child_cap);
    let (parent_cum, parent_depth) = {
        let parent = arena.get(parent_id).ok_or(CoreError::UnknownNode(parent_id))?;
        (parent.cum_logprob, parent.depth)
    };
    let mut expansion = Expansion {
        children: Vec::new(),
        completed: Vec::new(),
        truncated: Vec::new(),
    };
    for (token, step_logprob) in survivors {
        let depth = parent_depth + 1;
        let cum = parent_cum + step_logprob;
        let score = model_score(config.score_mode, cum, depth, step_logprob);
        match completion_kind(token, depth, config.max_len, terminators) {
            CompletionKind::Open => {
                let node_id = arena.add(parent_id, token, step_logprob, now, score)?;
                expansion.children.push(FrontierEntry {
                    node_id,
                    model_score: score,
                    discovery_time: now,
                    depth,
                });
            }
            kind => {
                let mut tokens = arena.path_tokens(parent_id)?;
                tokens.push(token);
                let completed = kind == CompletionKind::Completed;
                let hypothesis = Hypothesis {
                    tokens,
                    cum_logprob: cum,
                    model_score: score,
                    complete: completed,
                    truncated: !completed,
                };
                if completed {
                    expansion.completed.push(hypothesis);
                } else {
                    expansion.truncated.push(hypothesis);
                }
            }
        }
    }
    Ok(expansion)
}

/// Expands a single node through the model: one batch call of size one.
/// The node must not itself be complete.
pub fn expand(
    arena: &mut NodeArena,
    node_id: NodeId,
    model: &dyn SequenceModel,
    config: &DecodeConfig,
    now: Round,
) -> Result<Expansion, ModelError> {
    let prefix = arena.path_tokens(node_id).map_err(ModelError::Core)?;
    let dist = model.next_logprobs_one(&prefix)?;
    let terminators = config.terminators(model.vocabulary().extra_terminators());
    route_children(arena, node_id, &dist, config, &terminators, now).map_err(ModelError::Core)
}

// ── Best-k search ──────────────────────────────────────────────────────

/// Best-k decoding: each round re-keys the frontier by decay-adjusted
/// score, pops the top `g = min(k, frontier size)` nodes, expands them in
/// one batched model call, then prunes the frontier back to capacity.
pub fn bestk_decode(
    model: &dyn SequenceModel,
    config: &DecodeConfig,
) -> Result<DecodeResult, DecodeError> {
    let started = Instant::now();
    let mut result = DecodeResult::empty();
    if let Err(err) = config.validate() {
        return Err(DecodeError {
            source: ModelError::Core(err),
            partial: Box::new(result),
        });
    }
    let terminators = config.terminators(model.vocabulary().extra_terminators());
    let params = PriorityParams {
        decay: config.decay,
        depth_bonus: config.depth_bonus,
    };
    let mut frontier = Frontier::new(config.frontier_capacity);
    frontier
        .push(FrontierEntry {
            node_id: NodeArena::ROOT,
            model_score: f64::INFINITY,
            discovery_time: -1,
            depth: 0,
        })
        .expect("the root enters an empty frontier");

    let mut now: Round = 0;
    while result.explored_count < config.budget && !frontier.is_empty() {
        let g = config.k.min(frontier.len());
        let group = frontier.pop_top_g(now, g, &params);

        let prefixes: Vec<Vec<TokenId>> = match group
            .iter()
            .map(|&id| result.arena.path_tokens(id))
            .collect::<Result<_, _>>()
        {
            Ok(prefixes) => prefixes,
            Err(err) => return Err(fail(result, ModelError::Core(err), started)),
        };
        let views: Vec<&[TokenId]> = prefixes.iter().map(Vec::as_slice).collect();
        result.model_batch_calls += 1;
        let dists = match model.next_logprobs(&views) {
            Ok(dists) => dists,
            Err(err) => return Err(fail(result, err, started)),
        };

        for (&node_id, dist) in group.iter().zip(&dists) {
            let expansion = match route_children(
                &mut result.arena,
                node_id,
                dist,
                config,
                &terminators,
                now,
            ) {
                Ok(expansion) => expansion,
                Err(err) => return Err(fail(result, ModelError::Core(err), started)),
            };
            for child in expansion.children {
                frontier.push(child).expect("arena ids are never re-enqueued");
            }
            result.completed.extend(expansion.completed);
            result.truncated.extend(expansion.truncated);
        }

        frontier.prune(now, &params);
        result.explored_count += group.len();
        result.rounds += 1;
        now += 1;
    }
    result.wall_time = started.elapsed();
    Ok(result)
}

// ── Vanilla best-first search ──────────────────────────────────────────

/// Heap entry for the vanilla driver. Priorities are static (no decay),
/// so a keyed max-heap applies; ordering matches the frontier's
/// tie-breaking exactly: score, then newer discovery, then lower id.
#[derive(Debug, PartialEq)]
struct HeapEntry {
    score: f64,
    discovery_time: Round,
    node_id: NodeId,
}

impl Eq for HeapEntry {}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| self.discovery_time.cmp(&other.discovery_time))
            .then_with(|| other.node_id.cmp(&self.node_id))
    }
}

/// Vanilla best-first search: pops the single best node per round and
/// never prunes. The configured group size is ignored and temporal decay
/// is forced off; run [`bestk_decode`] with `k = 1` to opt into decay.
pub fn bfs_decode(
    model: &dyn SequenceModel,
    config: &DecodeConfig,
) -> Result<DecodeResult, DecodeError> {
    let started = Instant::now();
    let mut result = DecodeResult::empty();
    let config = DecodeConfig {
        k: 1,
        decay: DecayParams::disabled(),
        depth_bonus: 0.0,
        ..config.clone()
    };
    if let Err(err) = config.validate() {
        return Err(DecodeError {
            source: ModelError::Core(err),
            partial: Box::new(result),
        });
    }
    let terminators = config.terminators(model.vocabulary().extra_terminators());

    let mut open = BinaryHeap::new();
    open.push(HeapEntry {
        score: f64::INFINITY,
        discovery_time: -1,
        node_id: NodeArena::ROOT,
    });

    let mut now: Round = 0;
    while result.explored_count < config.budget {
        let Some(entry) = open.pop() else { break };
        let prefix = match result.arena.path_tokens(entry.node_id) {
            Ok(prefix) => prefix,
            Err(err) => return Err(fail(result, ModelError::Core(err), started)),
        };
        result.model_batch_calls += 1;
        let dist = match model.next_logprobs_one(&prefix) {
            Ok(dist) => dist,
            Err(err) => return Err(fail(result, err, started)),
        };
        let expansion = match route_children(
            &mut result.arena,
            entry.node_id,
            &dist,
            &config,
            &terminators,
            now,
        ) {
            Ok(expansion) => expansion,
            Err(err) => return Err(fail(result, ModelError::Core(err), started)),
        };
        for child in expansion.children {
            open.push(HeapEntry {
                score: child.model_score,
                discovery_time: child.discovery_time,
                node_id: child.node_id,
            });
        }
        result.completed.extend(expansion.completed);
        result.truncated.extend(expansion.truncated);
        result.explored_count += 1;
        result.rounds += 1;
        now += 1;
    }
    result.wall_time = started.elapsed();
    Ok(result)
}

fn fail(mut partial: DecodeResult, source: ModelError, started: Instant) -> DecodeError {
    partial.wall_time = started.elapsed();
    DecodeError {
        source,
        partial: Box::new(partial),
    }
}

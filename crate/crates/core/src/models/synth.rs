//! Seeded random trie populations for oracle tests, fuzzing, and the
//! completion-rate studies.
//!
//! Generation is deterministic per (config, seed); the same inputs always
//! reproduce the same trie.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::types::EOS_SURFACE;

use super::trie::{TrieModel, TrieSpec, TrieSpecNode};

/// Shape parameters for generated tries.
#[derive(Debug, Clone)]
pub struct TrieGenConfig {
    /// Hard depth bound; every path ends in EOS at or before this depth.
    pub max_depth: u32,
    /// Non-EOS children per node at depths below `taper_depth`.
    pub branching: (usize, usize),
    /// Depth at which branching switches to `branching_deep`.
    pub taper_depth: u32,
    pub branching_deep: (usize, usize),
    /// EOS enters branch distributions only at this depth or deeper,
    /// which is what makes a trie a "deep goal" instance.
    pub eos_from_depth: u32,
    /// Per-branch EOS mass, drawn uniformly from this range.
    pub eos_share: (f64, f64),
    /// Concentration of child probabilities; 0 is uniform.
    pub skew: f64,
    /// Size of the token surface pool.
    pub vocab_size: usize,
    /// Safety valve on spec nodes; generation flattens to EOS beyond it.
    pub max_nodes: usize,
}

impl TrieGenConfig {
    /// Small tries with EOS reachable everywhere: the fuzzing and
    /// exhaustive-oracle population.
    pub fn random_small() -> Self {
        TrieGenConfig {
            max_depth: 6,
            branching: (1, 3),
            taper_depth: 3,
            branching_deep: (1, 2),
            eos_from_depth: 1,
            eos_share: (0.15, 0.7),
            skew: 1.0,
            vocab_size: 10,
            max_nodes: 4_000,
        }
    }

    /// Tries whose only completions sit deep: wide flat branching up
    /// top, goal depth `goal`, moderate tail branching below.
    pub fn deep_goal(goal: u32) -> Self {
        TrieGenConfig {
            max_depth: goal + 3,
            branching: (3, 3),
            taper_depth: 3,
            branching_deep: (2, 2),
            eos_from_depth: goal,
            eos_share: (0.3, 0.6),
            skew: 0.4,
            vocab_size: 12,
            max_nodes: 20_000,
        }
    }
}

/// Generates the textual spec for a random trie.
pub fn generate_spec(config: &TrieGenConfig, seed: u64) -> TrieSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<String> = (0..config.vocab_size).map(|i| format!("t{i}")).collect();
    let mut nodes_left = config.max_nodes;
    branch(config, &mut rng, &pool, 1, &mut nodes_left)
}

/// Generates and compiles a random trie.
pub fn generate_trie(config: &TrieGenConfig, seed: u64) -> TrieModel {
    let spec = generate_spec(config, seed);
    TrieModel::from_spec(&spec).expect("generated specs are well-formed")
}

/// Builds the children of a node whose children sit at `depth`.
fn branch(
    config: &TrieGenConfig,
    rng: &mut ChaCha8Rng,
    pool: &[String],
    depth: u32,
    nodes_left: &mut usize,
) -> TrieSpec {
    let mut children = TrieSpec::new();
    let exhausted = *nodes_left == 0;
    let deepest = depth >= config.max_depth;
    let eos_allowed = depth >= config.eos_from_depth;

    if exhausted || deepest {
        // flatten to a guaranteed termination
        children.insert(
            EOS_SURFACE.to_string(),
            TrieSpecNode { prob: 1.0, children: TrieSpec::new() },
        );
        return children;
    }

    let (lo, hi) = if depth >= config.taper_depth {
        config.branching_deep
    } else {
        config.branching
    };
    let count = rng.gen_range(lo..=hi).min(pool.len()).min(*nodes_left);
    *nodes_left = nodes_left.saturating_sub(count);

    let eos_mass = if eos_allowed {
        rng.gen_range(config.eos_share.0..=config.eos_share.1)
    } else {
        0.0
    };

    let picks = rand::seq::index::sample(rng, pool.len(), count);
    let weights: Vec<f64> = (0..count)
        .map(|_| rng.gen_range(0.05..1.0f64).powf(config.skew))
        .collect();
    let total: f64 = weights.iter().sum();

    let mut assigned = 0.0;
    for (i, pick) in picks.iter().enumerate() {
        // give the last child the exact remainder so branches sum to 1
        let prob = if i + 1 == count {
            1.0 - eos_mass - assigned
        } else {
            (1.0 - eos_mass) * weights[i] / total
        };
        assigned += prob;
        let sub = branch(config, rng, pool, depth + 1, nodes_left);
        children.insert(pool[pick].clone(), TrieSpecNode { prob, children: sub });
    }
    if eos_mass > 0.0 || count == 0 {
        let prob = if count == 0 { 1.0 } else { eos_mass };
        children.insert(
            EOS_SURFACE.to_string(),
            TrieSpecNode { prob, children: TrieSpec::new() },
        );
    }
    children
}

/// `n` small random tries, each with at most 100 EOS leaves.
pub fn random_population(n: usize, base_seed: u64) -> Vec<TrieModel> {
    let config = TrieGenConfig::random_small();
    let mut out = Vec::with_capacity(n);
    let mut seed = base_seed;
    while out.len() < n {
        let trie = generate_trie(&config, seed);
        if trie.leaf_count() <= 100 {
            out.push(trie);
        }
        seed = seed.wrapping_add(1);
    }
    out
}

/// `n` deep-goal tries with per-instance goal depths, the population for
/// the completion-rate trend studies.
pub fn deep_goal_population(n: usize, base_seed: u64) -> Vec<TrieModel> {
    (0..n)
        .map(|i| {
            let seed = base_seed.wrapping_add(i as u64);
            let goal = 6 + (seed % 3) as u32; // 6..=8
            generate_trie(&TrieGenConfig::deep_goal(goal), seed)
        })
        .collect()
}

//! Shared fixtures for the decode benchmarks.

use bestk_core::engine::DecodeConfig;
use bestk_core::models::{NGramModel, TrieModel};
use bestk_core::scoring::{DecayParams, ScoreMode};

const SPEED_CORPUS: &str = include_str!("../../../data/tiny_corpus.txt");
const DEMO_TRIE: &str = include_str!("../../../data/demo_trie.json");

/// Trigram model over the bundled corpus; the backend the timing studies
/// run against.
pub fn speed_model() -> NGramModel {
    NGramModel::train(SPEED_CORPUS.lines(), 3, 0.1).expect("bundled corpus trains")
}

pub fn demo_trie() -> TrieModel {
    TrieModel::from_json_str(DEMO_TRIE).expect("bundled trie parses")
}

/// The configuration family the batch-economy comparisons use: equal
/// budget, decay on, only the group size varies.
pub fn grouped_config(k: usize) -> DecodeConfig {
    let mut config = DecodeConfig::new(k, 300, 30);
    config.score_mode = ScoreMode::LengthAdjusted { alpha: 0.5 };
    config.decay = DecayParams::new(0.1);
    config.child_cap = Some(10);
    config.child_threshold = 0.0;
    config
}

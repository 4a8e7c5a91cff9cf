//! Model-agnostic sequence decoding built around best-k search: parallel
//! frontier exploration with temporal decay and heap pruning, alongside
//! vanilla best-first search, beam-search and sampling baselines,
//! desk-scale model backends, and text-generation metrics.

pub mod baselines;
pub mod engine;
pub mod error;
pub mod frontier;
pub mod metrics;
pub mod models;
pub mod scoring;
pub mod types;

pub use baselines::{
    beam_sample_decode, beam_search, diverse_beam_search, nucleus_filter, sample_decode,
    typical_filter, BeamConfig, TokenFilter,
};
pub use engine::{bestk_decode, bfs_decode, expand, DecodeConfig, DecodeResult};
pub use error::{CoreError, DecodeError, ModelError};
pub use frontier::{Frontier, FrontierEntry, PriorityParams};
pub use models::{NGramModel, RemoteModel, SequenceModel, TokenLogProb, TrieModel};
pub use scoring::{adjusted_score, decay, model_score, DecayParams, ScoreMode};
pub use types::{
    Hypothesis, NodeArena, NodeId, Round, SearchNode, Token, TokenId, Vocabulary, BOS, EOS,
};

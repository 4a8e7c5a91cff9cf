//! Experiment harness for the best-k search engine: configuration,
//! corpus ingestion, sweep orchestration, result emission, reranking,
//! and the loopback mock model server.

pub mod config;
pub mod corpus;
pub mod error;
pub mod mockserver;
pub mod rerank;
pub mod runner;

pub use config::{
    BudgetConfig, ExperimentConfig, FilterConfig, ModelConfig, StrategyConfig, SweepConfig,
};
pub use corpus::{ingest_corpus, Corpus, Example};
pub use error::HarnessError;
pub use mockserver::MockServer;
pub use rerank::rerank_hook;
pub use runner::{
    build_model, decode_one, derive_seed, expand_sweep, run_experiment, HypRecord, ModelProvider,
    RunArtifacts, SharedModel, SweepPoint,
};

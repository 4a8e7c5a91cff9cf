//! Experiment configuration: strategy, model, budget, and sweep axes.
//!
//! The same structures serialize into the run manifest and deserialize
//! from `--config` files.

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use bestk_core::scoring::{ScoreMode, DEFAULT_BETA};
use bestk_core::TokenFilter;

use crate::error::HarnessError;

fn default_beta() -> f64 {
    DEFAULT_BETA
}
fn default_gamma() -> f64 {
    bestk_core::engine::DEFAULT_CHILD_THRESHOLD
}
fn default_frontier() -> usize {
    bestk_core::frontier::DEFAULT_CAPACITY
}
fn default_score() -> ScoreMode {
    ScoreMode::mean()
}
fn default_workers() -> usize {
    1
}

/// Which decoder runs and with what knobs. Budget-level parameters
/// (beam size, max length) live in [`BudgetConfig`].
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StrategyConfig {
    Bestk {
        k: usize,
        #[serde(default = "default_score")]
        score: ScoreMode,
        #[serde(default)]
        kappa: f64,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_gamma")]
        gamma: f64,
        /// `None` follows the group size k.
        #[serde(default)]
        child_cap: Option<usize>,
        #[serde(default = "default_frontier")]
        frontier_capacity: usize,
        #[serde(default)]
        depth_bonus: f64,
    },
    Bfs {
        #[serde(default = "default_score")]
        score: ScoreMode,
        #[serde(default = "default_gamma")]
        gamma: f64,
        #[serde(default)]
        child_cap: Option<usize>,
    },
    Beam {
        #[serde(default = "default_score")]
        score: ScoreMode,
    },
    Dbs {
        #[serde(default = "default_score")]
        score: ScoreMode,
        groups: usize,
        penalty: f64,
    },
    Sample {
        filter: FilterConfig,
        /// Defaults to the equivalent beam size.
        #[serde(default)]
        num_samples: Option<usize>,
    },
    BeamSample {
        #[serde(default = "default_score")]
        score: ScoreMode,
        filter: FilterConfig,
    },
}

impl StrategyConfig {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyConfig::Bestk { .. } => "bestk",
            StrategyConfig::Bfs { .. } => "bfs",
            StrategyConfig::Beam { .. } => "beam",
            StrategyConfig::Dbs { .. } => "dbs",
            StrategyConfig::Sample { .. } => "sample",
            StrategyConfig::BeamSample { .. } => "beam-sample",
        }
    }
}

/// Truncation filter descriptor for the stochastic strategies.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FilterConfig {
    Nucleus { p: f64 },
    Typical { tau: f64 },
}

impl FilterConfig {
    pub fn to_filter(self) -> TokenFilter {
        match self {
            FilterConfig::Nucleus { p } => TokenFilter::Nucleus(p),
            FilterConfig::Typical { tau } => TokenFilter::Typical(tau),
        }
    }
}

/// Which model backend answers prefix queries.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelConfig {
    Trie {
        path: PathBuf,
    },
    Ngram {
        corpus: PathBuf,
        order: usize,
        add_k: f64,
    },
    Remote {
        endpoint: String,
        /// Plain-text vocabulary, one surface per line; BOS/EOS implied.
        vocab: PathBuf,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default = "default_max_batch")]
        max_batch: usize,
    },
}

fn default_timeout_ms() -> u64 {
    10_000
}
fn default_max_batch() -> usize {
    bestk_core::models::remote::DEFAULT_MAX_BATCH
}

/// Budget normalization: every strategy is granted `beam_size * max_len`
/// model evaluations' worth of search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct BudgetConfig {
    pub beam_size: usize,
    pub max_len: u32,
}

impl BudgetConfig {
    pub fn node_budget(&self) -> usize {
        self.beam_size * self.max_len as usize
    }
}

/// Grid axes. Absent axes keep the base configuration's value; present
/// axes must be non-empty.
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct SweepConfig {
    #[serde(default)]
    pub kappa: Option<Vec<f64>>,
    #[serde(default)]
    pub k: Option<Vec<usize>>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub beam_size: Option<Vec<usize>>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        let empty = self.kappa.as_deref() == Some(&[])
            || self.k.as_deref() == Some(&[])
            || self.alpha.as_deref() == Some(&[])
            || self.beam_size.as_deref() == Some(&[]);
        if empty {
            return Err(HarnessError::Config("sweep grids must be non-empty".into()));
        }
        Ok(())
    }
}

/// Everything one `bench`/`sweep` invocation needs; serialized verbatim
/// into the run manifest.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub strategy: StrategyConfig,
    pub model: ModelConfig,
    pub budget: BudgetConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// Extra termination surfaces beyond EOS.
    #[serde(default)]
    pub extra_terminators: BTreeSet<String>,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.sweep.validate()?;
        if self.budget.beam_size == 0 || self.budget.max_len == 0 {
            return Err(HarnessError::Config(
                "beam size and max length must be positive".into(),
            ));
        }
        if self.workers == 0 {
            return Err(HarnessError::Config("workers must be >= 1".into()));
        }
        if let StrategyConfig::Bestk { k, .. } = &self.strategy {
            if *k > self.budget.beam_size {
                return Err(HarnessError::Config(format!(
                    "group size k={k} exceeds the equivalent beam size {}",
                    self.budget.beam_size
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }
}

//! Experiment orchestration: sweep expansion, per-example decoding,
//! metric aggregation, and artifact emission.
//!
//! Artifacts per run: `manifest.json` (full config + version),
//! `hyps_<label>.jsonl` per sweep point, `aggregate.csv` (deterministic
//! columns only; reruns with the same manifest are byte-identical), and
//! `timings.csv` (wall-clock sidecar, excluded from the deterministic
//! aggregate on purpose).

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use bestk_core::baselines::{
    beam_sample_decode, beam_search, diverse_beam_search, sample_decode_scored, BeamConfig,
};
use bestk_core::engine::{bestk_decode, bfs_decode, DecodeConfig, DecodeResult};
use bestk_core::metrics::{self, ExampleOutputs, MetricsReport, Output};
use bestk_core::models::{NGramModel, RemoteModel, SequenceModel, TrieModel};
use bestk_core::scoring::{DecayParams, ScoreMode};
use bestk_core::types::Vocabulary;
use bestk_core::Hypothesis;

use crate::config::{ExperimentConfig, ModelConfig, StrategyConfig};
use crate::corpus::{Corpus, Example};
use crate::error::HarnessError;

/// Column order of `aggregate.csv`; also documented in the README.
pub const AGGREGATE_COLUMNS: &[&str] = &[
    "label",
    "strategy",
    "beam_size",
    "k",
    "kappa",
    "alpha",
    "score",
    "max_len",
    "budget",
    "examples",
    "failures",
    "s_mean",
    "unique_s_mean",
    "d1",
    "d2",
    "d3",
    "oracle_r1",
    "oracle_r2",
    "oracle_rl",
    "mean_r1",
    "mean_r2",
    "mean_rl",
    "top_r1",
    "top_r2",
    "top_rl",
    "completion_rate",
    "explored_mean",
    "rounds_mean",
    "batch_calls_mean",
];

// ── Model providers ────────────────────────────────────────────────────

/// Hands each example its conditioned model. The CLI shares one backend
/// across the corpus; generated-population studies map examples to their
/// own tries.
pub trait ModelProvider: Sync {
    fn model_for(&self, example: &Example) -> Result<Arc<dyn SequenceModel>, HarnessError>;
}

pub struct SharedModel(pub Arc<dyn SequenceModel>);

impl ModelProvider for SharedModel {
    fn model_for(&self, _example: &Example) -> Result<Arc<dyn SequenceModel>, HarnessError> {
        Ok(Arc::clone(&self.0))
    }
}

pub fn build_model(config: &ModelConfig) -> Result<Arc<dyn SequenceModel>, HarnessError> {
    match config {
        ModelConfig::Trie { path } => Ok(Arc::new(TrieModel::from_path(path)?)),
        ModelConfig::Ngram { corpus, order, add_k } => {
            Ok(Arc::new(NGramModel::from_corpus_path(corpus, *order, *add_k)?))
        }
        ModelConfig::Remote {
            endpoint,
            vocab,
            timeout_ms,
            max_batch,
        } => {
            let text =
                std::fs::read_to_string(vocab).map_err(|e| HarnessError::io(vocab, e))?;
            let surfaces: Vec<&str> = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .collect();
            let vocabulary = Vocabulary::new(surfaces)
                .map_err(|e| HarnessError::Config(format!("vocab file: {e}")))?;
            Ok(Arc::new(RemoteModel::with_options(
                endpoint.clone(),
                vocabulary,
                std::time::Duration::from_millis(*timeout_ms),
                *max_batch,
            )))
        }
    }
}

// ── Sweep expansion ────────────────────────────────────────────────────

/// One fully-instantiated grid point.
#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub label: String,
    pub strategy: StrategyConfig,
    pub beam_size: usize,
    pub max_len: u32,
    /// Extra termination surfaces, resolved against the model vocabulary
    /// at decode time. Only the search strategies consume these.
    pub extra_terminators: BTreeSet<String>,
}

impl SweepPoint {
    pub fn node_budget(&self) -> usize {
        self.beam_size * self.max_len as usize
    }
}

fn with_alpha(score: ScoreMode, alpha: Option<f64>) -> ScoreMode {
    match alpha {
        Some(alpha) => ScoreMode::LengthAdjusted { alpha },
        None => score,
    }
}

fn score_label(score: &ScoreMode) -> String {
    match score {
        ScoreMode::Original => "original".to_string(),
        ScoreMode::LengthAdjusted { alpha } => format!("alpha{alpha}"),
        ScoreMode::Memoryless => "memoryless".to_string(),
    }
}

/// Expands the configured grids into concrete sweep points. Axes a
/// strategy has no use for are ignored rather than multiplied out.
pub fn expand_sweep(config: &ExperimentConfig) -> Result<Vec<SweepPoint>, HarnessError> {
    config.validate()?;
    let one = |value: usize| vec![value];
    let beams = config
        .sweep
        .beam_size
        .clone()
        .unwrap_or_else(|| one(config.budget.beam_size));

    let mut points = Vec::new();
    for &beam_size in &beams {
        match &config.strategy {
            StrategyConfig::Bestk {
                k,
                score,
                kappa,
                beta,
                gamma,
                child_cap,
                frontier_capacity,
                depth_bonus,
            } => {
                let ks = config.sweep.k.clone().unwrap_or_else(|| one(*k));
                let kappas = config.sweep.kappa.clone().unwrap_or_else(|| vec![*kappa]);
                let alphas: Vec<Option<f64>> = match &config.sweep.alpha {
                    Some(grid) => grid.iter().copied().map(Some).collect(),
                    None => vec![None],
                };
                for &k in &ks {
                    for &kappa in &kappas {
                        for &alpha in &alphas {
                            let score = with_alpha(*score, alpha);
                            points.push(SweepPoint {
                                label: format!(
                                    "bestk_b{beam_size}_k{k}_kappa{kappa}_{}",
                                    score_label(&score)
                                ),
                                extra_terminators: config.extra_terminators.clone(),
                                strategy: StrategyConfig::Bestk {
                                    k,
                                    score,
                                    kappa,
                                    beta: *beta,
                                    gamma: *gamma,
                                    child_cap: *child_cap,
                                    frontier_capacity: *frontier_capacity,
                                    depth_bonus: *depth_bonus,
                                },
                                beam_size,
                                max_len: config.budget.max_len,
                            });
                        }
                    }
                }
            }
            StrategyConfig::Bfs { score, gamma, child_cap } => {
                let alphas: Vec<Option<f64>> = match &config.sweep.alpha {
                    Some(grid) => grid.iter().copied().map(Some).collect(),
                    None => vec![None],
                };
                for &alpha in &alphas {
                    let score = with_alpha(*score, alpha);
                    points.push(SweepPoint {
                        label: format!("bfs_b{beam_size}_{}", score_label(&score)),
                        extra_terminators: config.extra_terminators.clone(),
                        strategy: StrategyConfig::Bfs {
                            score,
                            gamma: *gamma,
                            child_cap: *child_cap,
                        },
                        beam_size,
                        max_len: config.budget.max_len,
                    });
                }
            }
            other => {
                let label = format!("{}_b{beam_size}", other.name());
                points.push(SweepPoint {
                    label,
                    strategy: other.clone(),
                    beam_size,
                    max_len: config.budget.max_len,
                    extra_terminators: config.extra_terminators.clone(),
                });
            }
        }
    }
    Ok(points)
}

// ── Decoding ───────────────────────────────────────────────────────────

/// Stable 64-bit seed per (root seed, example, sweep point): FNV-1a over
/// the identifying bytes, so manifests reproduce runs bit-for-bit.
pub fn derive_seed(root: u64, example_id: &str, point_index: usize) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            hash ^= u64::from(b);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    eat(&root.to_le_bytes());
    eat(example_id.as_bytes());
    eat(&(point_index as u64).to_le_bytes());
    hash
}

/// Resolves termination surfaces to token ids, failing on unknowns.
fn resolve_terminators(
    surfaces: &BTreeSet<String>,
    vocab: &Vocabulary,
) -> Result<std::collections::BTreeSet<bestk_core::TokenId>, HarnessError> {
    surfaces
        .iter()
        .map(|surface| {
            vocab.id(surface).ok_or_else(|| {
                HarnessError::Config(format!(
                    "termination surface {surface:?} is not in the model vocabulary"
                ))
            })
        })
        .collect()
}

/// Runs one sweep point on one example.
pub fn decode_one(
    point: &SweepPoint,
    model: &dyn SequenceModel,
    seed: u64,
) -> Result<DecodeResult, HarnessError> {
    let budget = point.node_budget();
    let extra = resolve_terminators(&point.extra_terminators, model.vocabulary())?;
    if !extra.is_empty()
        && !matches!(
            point.strategy,
            StrategyConfig::Bestk { .. } | StrategyConfig::Bfs { .. }
        )
    {
        // baseline decoders terminate on the vocabulary's own set only
        return Err(HarnessError::Config(
            "extra terminators are supported for the search strategies only".into(),
        ));
    }
    let result = match &point.strategy {
        StrategyConfig::Bestk {
            k,
            score,
            kappa,
            beta,
            gamma,
            child_cap,
            frontier_capacity,
            depth_bonus,
        } => {
            let mut config = DecodeConfig::new(*k, budget, point.max_len);
            config.score_mode = *score;
            config.decay = DecayParams { kappa: *kappa, beta: *beta };
            config.child_threshold = *gamma;
            config.child_cap = Some(child_cap.unwrap_or(*k));
            config.frontier_capacity = *frontier_capacity;
            config.depth_bonus = *depth_bonus;
            config.extra_terminators = extra;
            bestk_decode(model, &config)
        }
        StrategyConfig::Bfs { score, gamma, child_cap } => {
            let mut config = DecodeConfig::new(1, budget, point.max_len);
            config.score_mode = *score;
            config.child_threshold = *gamma;
            config.child_cap = Some(child_cap.unwrap_or(point.beam_size));
            config.extra_terminators = extra;
            bfs_decode(model, &config)
        }
        StrategyConfig::Beam { score } => {
            let mut config = BeamConfig::new(point.beam_size, point.max_len);
            config.score_mode = *score;
            beam_search(model, &config)
        }
        StrategyConfig::Dbs { score, groups, penalty } => {
            let mut config = BeamConfig::new(point.beam_size, point.max_len);
            config.score_mode = *score;
            config.diversity_groups = *groups;
            config.diversity_penalty = *penalty;
            diverse_beam_search(model, &config)
        }
        StrategyConfig::Sample { filter, num_samples } => sample_decode_scored(
            model,
            filter.to_filter(),
            num_samples.unwrap_or(point.beam_size),
            point.max_len,
            seed,
            ScoreMode::mean(),
        ),
        StrategyConfig::BeamSample { score, filter } => {
            let mut config = BeamConfig::new(point.beam_size, point.max_len);
            config.score_mode = *score;
            config.sampling = filter.to_filter();
            config.seed = seed;
            beam_sample_decode(model, &config)
        }
    };
    result.map_err(|e| HarnessError::Model(e.source))
}

// ── Emission ───────────────────────────────────────────────────────────

/// One hypothesis line of the JSONL output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypRecord {
    /// `<example_id>:<rank>`; the key external score files use.
    pub id: String,
    pub example_id: String,
    pub rank: usize,
    /// Content tokens: BOS and termination tokens stripped.
    pub tokens: Vec<String>,
    pub cum_logprob: f64,
    pub model_score: f64,
    pub complete: bool,
    pub truncated: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original_rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_score: Option<f64>,
}

/// Content words of a hypothesis: the BOS sentinel and any final
/// termination token are presentation noise for metrics and reranking.
fn content_tokens(hyp: &Hypothesis, vocab: &Vocabulary) -> Vec<String> {
    let mut ids = &hyp.tokens[1..];
    if hyp.complete {
        if let Some((_, rest)) = ids.split_last() {
            ids = rest;
        }
    }
    vocab.render(ids)
}

/// Hypotheses of one run in emission order: completions ranked by model
/// score, then truncated leftovers.
fn ranked_hypotheses(result: &DecodeResult) -> Vec<&Hypothesis> {
    let mut completed: Vec<&Hypothesis> = result.completed.iter().collect();
    completed.sort_by(|a, b| b.model_score.total_cmp(&a.model_score));
    let mut truncated: Vec<&Hypothesis> = result.truncated.iter().collect();
    truncated.sort_by(|a, b| b.model_score.total_cmp(&a.model_score));
    completed.into_iter().chain(truncated).collect()
}

/// JSONL records for one decode, in emission order.
pub fn ranked_records(
    result: &DecodeResult,
    vocab: &Vocabulary,
    example_id: &str,
) -> Vec<HypRecord> {
    ranked_hypotheses(result)
        .into_iter()
        .enumerate()
        .map(|(rank, hyp)| HypRecord {
            id: format!("{example_id}:{rank}"),
            example_id: example_id.to_string(),
            rank,
            tokens: content_tokens(hyp, vocab),
            cum_logprob: hyp.cum_logprob,
            model_score: hyp.model_score,
            complete: hyp.complete,
            truncated: hyp.truncated,
            original_rank: None,
            external_score: None,
        })
        .collect()
}

#[derive(Debug)]
struct ExampleRun {
    example_id: String,
    records: Vec<HypRecord>,
    outputs: ExampleOutputs,
    explored: usize,
    rounds: usize,
    batch_calls: usize,
    wall_time_s: f64,
    error: Option<String>,
}

fn run_example(
    point: &SweepPoint,
    point_index: usize,
    example: &Example,
    provider: &dyn ModelProvider,
    root_seed: u64,
) -> ExampleRun {
    let mut run = ExampleRun {
        example_id: example.id.clone(),
        records: Vec::new(),
        outputs: ExampleOutputs {
            outputs: Vec::new(),
            references: example.references.iter().map(|r| metrics::tokenize(r)).collect(),
            wall_time_s: 0.0,
        },
        explored: 0,
        rounds: 0,
        batch_calls: 0,
        wall_time_s: 0.0,
        error: None,
    };
    let model = match provider.model_for(example) {
        Ok(model) => model,
        Err(err) => {
            run.error = Some(err.to_string());
            return run;
        }
    };
    let seed = derive_seed(root_seed, &example.id, point_index);
    match decode_one(point, model.as_ref(), seed) {
        Ok(result) => {
            run.records = ranked_records(&result, model.vocabulary(), &example.id);
            for record in &run.records {
                run.outputs.outputs.push(Output {
                    tokens: record.tokens.iter().map(|t| t.to_lowercase()).collect(),
                    truncated: record.truncated,
                });
            }
            run.explored = result.explored_count;
            run.rounds = result.rounds;
            run.batch_calls = result.model_batch_calls;
            run.wall_time_s = result.wall_time.as_secs_f64();
            run.outputs.wall_time_s = run.wall_time_s;
        }
        Err(err) => run.error = Some(err.to_string()),
    }
    run
}

/// Aggregate row for one sweep point.
#[derive(Debug, Clone)]
pub struct PointSummary {
    pub label: String,
    pub examples: usize,
    pub failures: usize,
    pub report: MetricsReport,
    pub explored_mean: f64,
    pub rounds_mean: f64,
    pub batch_calls_mean: f64,
    pub mean_decode_s: f64,
}

/// Paths of everything a run wrote.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub manifest: PathBuf,
    pub aggregate_csv: PathBuf,
    pub timings_csv: PathBuf,
    pub hypothesis_files: Vec<PathBuf>,
    pub summaries: Vec<PointSummary>,
    pub failures: usize,
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    std::fs::write(path, contents).map_err(|e| HarnessError::io(path, e))
}

/// Decodes every (sweep point x example) pair and writes the artifact
/// set. Per-example decode failures are recorded and skipped; the run
/// carries on.
pub fn run_experiment(
    config: &ExperimentConfig,
    corpus: &Corpus,
    provider: &dyn ModelProvider,
) -> Result<RunArtifacts, HarnessError> {
    config.validate()?;
    let points = expand_sweep(config)?;
    let out = &config.output_dir;
    std::fs::create_dir_all(out).map_err(|e| HarnessError::io(out, e))?;

    let manifest_path = out.join("manifest.json");
    let manifest = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "points": points.iter().map(|p| &p.label).collect::<Vec<_>>(),
        "examples": corpus.examples.len(),
    });
    write_file(&manifest_path, &serde_json::to_string_pretty(&manifest)?)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;

    let mut summaries = Vec::new();
    let mut hypothesis_files = Vec::new();
    let mut failures = 0;
    for (point_index, point) in points.iter().enumerate() {
        let runs: Vec<ExampleRun> = pool.install(|| {
            corpus
                .examples
                .par_iter()
                .map(|example| run_example(point, point_index, example, provider, config.seed))
                .collect()
        });

        let hyps_path = out.join(format!("hyps_{}.jsonl", point.label));
        let mut file = std::fs::File::create(&hyps_path)
            .map_err(|e| HarnessError::io(&hyps_path, e))?;
        for run in &runs {
            for record in &run.records {
                let line = serde_json::to_string(record)?;
                writeln!(file, "{line}").map_err(|e| HarnessError::io(&hyps_path, e))?;
            }
        }
        hypothesis_files.push(hyps_path);

        let ok: Vec<&ExampleRun> = runs.iter().filter(|r| r.error.is_none()).collect();
        let failed = runs.len() - ok.len();
        failures += failed;
        for run in runs.iter().filter(|r| r.error.is_some()) {
            eprintln!(
                "warn: {} on example {}: {}",
                point.label,
                run.example_id,
                run.error.as_deref().unwrap_or("unknown")
            );
        }
        let report =
            metrics::aggregate(&ok.iter().map(|r| r.outputs.clone()).collect::<Vec<_>>());
        let denom = ok.len().max(1) as f64;
        summaries.push(PointSummary {
            label: point.label.clone(),
            examples: ok.len(),
            failures: failed,
            explored_mean: ok.iter().map(|r| r.explored as f64).sum::<f64>() / denom,
            rounds_mean: ok.iter().map(|r| r.rounds as f64).sum::<f64>() / denom,
            batch_calls_mean: ok.iter().map(|r| r.batch_calls as f64).sum::<f64>() / denom,
            mean_decode_s: ok.iter().map(|r| r.wall_time_s).sum::<f64>() / denom,
            report,
        });
    }

    let aggregate_path = out.join("aggregate.csv");
    write_aggregate_csv(&aggregate_path, &points, &summaries)?;
    let timings_path = out.join("timings.csv");
    write_timings_csv(&timings_path, &summaries)?;

    Ok(RunArtifacts {
        manifest: manifest_path,
        aggregate_csv: aggregate_path,
        timings_csv: timings_path,
        hypothesis_files,
        summaries,
        failures,
    })
}

fn strategy_cells(strategy: &StrategyConfig) -> (String, String, String, String) {
    let score_of = |score: &ScoreMode| score_label(score);
    match strategy {
        StrategyConfig::Bestk { k, kappa, score, .. } => (
            k.to_string(),
            format!("{kappa}"),
            alpha_cell(score),
            score_of(score),
        ),
        StrategyConfig::Bfs { score, .. }
        | StrategyConfig::Beam { score }
        | StrategyConfig::Dbs { score, .. }
        | StrategyConfig::BeamSample { score, .. } => {
            (String::new(), String::new(), alpha_cell(score), score_of(score))
        }
        StrategyConfig::Sample { .. } => {
            (String::new(), String::new(), String::new(), String::new())
        }
    }
}

fn alpha_cell(score: &ScoreMode) -> String {
    match score {
        ScoreMode::LengthAdjusted { alpha } => format!("{alpha}"),
        _ => String::new(),
    }
}

fn write_aggregate_csv(
    path: &Path,
    points: &[SweepPoint],
    summaries: &[PointSummary],
) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_path(path).map_err(HarnessError::Csv)?;
    writer.write_record(AGGREGATE_COLUMNS)?;
    for (point, summary) in points.iter().zip(summaries) {
        let (k, kappa, alpha, score) = strategy_cells(&point.strategy);
        let r = &summary.report;
        let f = |v: f64| format!("{v:.6}");
        writer.write_record([
            point.label.clone(),
            point.strategy.name().to_string(),
            point.beam_size.to_string(),
            k,
            kappa,
            alpha,
            score,
            point.max_len.to_string(),
            point.node_budget().to_string(),
            summary.examples.to_string(),
            summary.failures.to_string(),
            f(r.s_mean),
            f(r.unique_s_mean),
            f(r.distinct[0]),
            f(r.distinct[1]),
            f(r.distinct[2]),
            f(r.rouge_oracle.r1),
            f(r.rouge_oracle.r2),
            f(r.rouge_oracle.rl),
            f(r.rouge_mean.r1),
            f(r.rouge_mean.r2),
            f(r.rouge_mean.rl),
            f(r.rouge_top.r1),
            f(r.rouge_top.r2),
            f(r.rouge_top.rl),
            f(r.completion_rate),
            f(summary.explored_mean),
            f(summary.rounds_mean),
            f(summary.batch_calls_mean),
        ])?;
    }
    writer.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

fn write_timings_csv(path: &Path, summaries: &[PointSummary]) -> Result<(), HarnessError> {
    let mut writer = csv::Writer::from_path(path).map_err(HarnessError::Csv)?;
    writer.write_record(["label", "mean_decode_s"])?;
    for summary in summaries {
        writer.write_record([
            summary.label.clone(),
            format!("{:.6}", summary.mean_decode_s),
        ])?;
    }
    writer.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

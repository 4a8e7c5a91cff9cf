//! `bestk`: decode, benchmark, and sweep sequence decoders over toy
//! model backends.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bestk_cli::config::{
    BudgetConfig, ExperimentConfig, FilterConfig, ModelConfig, StrategyConfig, SweepConfig,
};
use bestk_cli::corpus::ingest_corpus;
use bestk_cli::error::HarnessError;
use bestk_cli::mockserver::MockServer;
use bestk_cli::rerank::rerank_hook;
use bestk_cli::runner::{
    build_model, decode_one, derive_seed, ranked_records, run_experiment, SharedModel, SweepPoint,
};
use bestk_core::scoring::ScoreMode;

#[derive(Parser)]
#[command(name = "bestk", version, about = "Best-k sequence decoding toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decode one example and print its hypotheses as JSONL
    Decode(DecodeArgs),
    /// Run the configured strategy over a corpus and write artifacts
    Bench(BenchArgs),
    /// Run a parameter grid over a corpus and write artifacts
    Sweep(SweepArgs),
    /// Serve a local model over the JSON wire protocol
    MockServer(MockServerArgs),
    /// Reorder a hypothesis file by externally supplied scores
    Rerank(RerankArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// Model backend: trie | ngram | remote
    #[arg(long, default_value = "trie")]
    model: String,
    /// Trie JSON file or n-gram training corpus
    #[arg(long)]
    model_path: Option<PathBuf>,
    /// N-gram order
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// Add-k smoothing constant
    #[arg(long, default_value_t = 0.1)]
    add_k: f64,
    /// Remote model endpoint, e.g. http://127.0.0.1:7070/
    #[arg(long)]
    endpoint: Option<String>,
    /// Vocabulary file for remote models, one surface per line
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    timeout_ms: u64,
    #[arg(long, default_value_t = 64)]
    max_batch: usize,
}

impl ModelArgs {
    fn to_config(&self) -> Result<ModelConfig, HarnessError> {
        let need_path = || {
            self.model_path
                .clone()
                .ok_or_else(|| HarnessError::Config("--model-path is required".into()))
        };
        match self.model.as_str() {
            "trie" => Ok(ModelConfig::Trie { path: need_path()? }),
            "ngram" => Ok(ModelConfig::Ngram {
                corpus: need_path()?,
                order: self.order,
                add_k: self.add_k,
            }),
            "remote" => Ok(ModelConfig::Remote {
                endpoint: self
                    .endpoint
                    .clone()
                    .ok_or_else(|| HarnessError::Config("--endpoint is required".into()))?,
                vocab: self
                    .vocab
                    .clone()
                    .ok_or_else(|| HarnessError::Config("--vocab is required".into()))?,
                timeout_ms: self.timeout_ms,
                max_batch: self.max_batch,
            }),
            other => Err(HarnessError::Config(format!("unknown model kind {other:?}"))),
        }
    }
}

#[derive(Args)]
struct StrategyArgs {
    /// bestk | bfs | beam | dbs | sample | beam-sample
    #[arg(long, default_value = "bestk")]
    strategy: String,
    /// Group size for best-k search
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Temporal decay weight
    #[arg(long, default_value_t = 0.0)]
    kappa: f64,
    /// Temporal decay exponent
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Scoring function: original | mean | last | alpha (reads --alpha)
    #[arg(long, default_value = "mean")]
    score: String,
    /// Length-adjustment exponent used with --score alpha
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    /// Probability floor for candidate children
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    /// Children kept per expansion (defaults to k)
    #[arg(long)]
    child_cap: Option<usize>,
    #[arg(long, default_value_t = 500)]
    frontier_capacity: usize,
    /// Experimental depth bonus weight (ablations only)
    #[arg(long, default_value_t = 0.0)]
    depth_bonus: f64,
    /// Beam groups for dbs
    #[arg(long, default_value_t = 5)]
    groups: usize,
    /// Diversity penalty for dbs
    #[arg(long, default_value_t = 1.0)]
    penalty: f64,
    /// Truncation filter for sampling strategies: nucleus | typical
    #[arg(long)]
    filter: Option<String>,
    /// Filter threshold (p or tau)
    #[arg(long, default_value_t = 0.9)]
    threshold: f64,
    /// Samples to draw (defaults to the beam size)
    #[arg(long)]
    num_samples: Option<usize>,
}

impl StrategyArgs {
    fn score_mode(&self) -> Result<ScoreMode, HarnessError> {
        match self.score.as_str() {
            "original" => Ok(ScoreMode::Original),
            "mean" => Ok(ScoreMode::mean()),
            "last" | "memoryless" => Ok(ScoreMode::Memoryless),
            "alpha" => Ok(ScoreMode::LengthAdjusted { alpha: self.alpha }),
            other => Err(HarnessError::Config(format!(
                "unknown score {other:?}; use original | mean | last | alpha"
            ))),
        }
    }

    fn filter_config(&self) -> Result<FilterConfig, HarnessError> {
        match self.filter.as_deref() {
            Some("nucleus") => Ok(FilterConfig::Nucleus { p: self.threshold }),
            Some("typical") => Ok(FilterConfig::Typical { tau: self.threshold }),
            Some(other) => Err(HarnessError::Config(format!(
                "unknown filter {other:?}; use nucleus | typical"
            ))),
            None => Err(HarnessError::Config(
                "--filter is required for sampling strategies".into(),
            )),
        }
    }

    fn to_config(&self) -> Result<StrategyConfig, HarnessError> {
        let score = self.score_mode()?;
        match self.strategy.as_str() {
            "bestk" => Ok(StrategyConfig::Bestk {
                k: self.k,
                score,
                kappa: self.kappa,
                beta: self.beta,
                gamma: self.gamma,
                child_cap: self.child_cap,
                frontier_capacity: self.frontier_capacity,
                depth_bonus: self.depth_bonus,
            }),
            "bfs" => Ok(StrategyConfig::Bfs {
                score,
                gamma: self.gamma,
                child_cap: self.child_cap,
            }),
            "beam" => Ok(StrategyConfig::Beam { score }),
            "dbs" => Ok(StrategyConfig::Dbs {
                score,
                groups: self.groups,
                penalty: self.penalty,
            }),
            "sample" => Ok(StrategyConfig::Sample {
                filter: self.filter_config()?,
                num_samples: self.num_samples,
            }),
            "beam-sample" => Ok(StrategyConfig::BeamSample {
                score,
                filter: self.filter_config()?,
            }),
            other => Err(HarnessError::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

#[derive(Args)]
struct BudgetArgs {
    /// Equivalent beam size b; the node budget is b * max_len
    #[arg(long, short = 'b', default_value_t = 10)]
    beam_size: usize,
    #[arg(long, default_value_t = 16)]
    max_len: u32,
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    /// Opaque conditioning input (ignored by the toy backends)
    #[arg(long, default_value = "")]
    input: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Extra termination surfaces beyond <eos> (search strategies)
    #[arg(long, value_delimiter = ',')]
    terminators: Option<Vec<String>>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSONL corpus: {"id", "input", "references"} per line
    #[arg(long)]
    corpus: PathBuf,
    /// Output directory for artifacts
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// JSON experiment config; overrides all flags when given
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    strategy: StrategyArgs,
    #[command(flatten)]
    budget: BudgetArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Extra termination surfaces beyond <eos> (search strategies)
    #[arg(long, value_delimiter = ',')]
    terminators: Option<Vec<String>>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    bench: BenchArgs,
    /// Comma-separated temporal decay weights
    #[arg(long, value_delimiter = ',')]
    kappa_grid: Option<Vec<f64>>,
    /// Comma-separated group sizes
    #[arg(long, value_delimiter = ',')]
    k_grid: Option<Vec<usize>>,
    /// Comma-separated length-adjustment exponents
    #[arg(long, value_delimiter = ',')]
    alpha_grid: Option<Vec<f64>>,
    /// Comma-separated equivalent beam sizes
    #[arg(long, value_delimiter = ',')]
    beam_grid: Option<Vec<usize>>,
}

#[derive(Args)]
struct MockServerArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value = "127.0.0.1:7070")]
    addr: String,
    /// Write the served vocabulary (one surface per line, BOS/EOS
    /// omitted) for remote clients to load with --vocab
    #[arg(long)]
    emit_vocab: Option<PathBuf>,
}

#[derive(Args)]
struct RerankArgs {
    /// Hypotheses JSONL written by bench/sweep
    #[arg(long)]
    hypotheses: PathBuf,
    /// JSON map of hypothesis id to external score
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn experiment_config(
    args: &BenchArgs,
    sweep: SweepConfig,
) -> Result<ExperimentConfig, HarnessError> {
    if let Some(path) = &args.config {
        // the config file wins over command-line flags
        return ExperimentConfig::load(path);
    }
    let config = ExperimentConfig {
        strategy: args.strategy.to_config()?,
        model: args.model.to_config()?,
        budget: BudgetConfig {
            beam_size: args.budget.beam_size,
            max_len: args.budget.max_len,
        },
        sweep,
        output_dir: args.out.clone(),
        seed: args.seed,
        workers: args.workers,
        extra_terminators: args.terminators.clone().unwrap_or_default().into_iter().collect(),
    };
    config.validate()?;
    Ok(config)
}

fn cmd_decode(args: &DecodeArgs) -> Result<(), HarnessError> {
    let model = build_model(&args.model.to_config()?)?;
    let point = SweepPoint {
        label: "decode".to_string(),
        strategy: args.strategy.to_config()?,
        beam_size: args.budget.beam_size,
        max_len: args.budget.max_len,
        extra_terminators: args.terminators.clone().unwrap_or_default().into_iter().collect(),
    };
    let seed = derive_seed(args.seed, &args.input, 0);
    let result = decode_one(&point, model.as_ref(), seed)?;
    for record in ranked_records(&result, model.vocabulary(), "cli") {
        println!("{}", serde_json::to_string(&record)?);
    }
    eprintln!(
        "explored {} nodes in {} rounds ({} batch calls, {:.3}s); {} completed, {} truncated",
        result.explored_count,
        result.rounds,
        result.model_batch_calls,
        result.wall_time.as_secs_f64(),
        result.completed.len(),
        result.truncated.len(),
    );
    Ok(())
}

fn run_and_report(config: &ExperimentConfig, corpus_path: &Path) -> Result<usize, HarnessError> {
    let corpus = ingest_corpus(corpus_path, true)?;
    let model = build_model(&config.model)?;
    let artifacts = run_experiment(config, &corpus, &SharedModel(model))?;
    for summary in &artifacts.summaries {
        // ratios are stored in [0, 1]; the console shows the usual x100
        println!(
            "{}: S={:.1} |S|={:.1} D1={:.1} oracleR1={:.1} meanR1={:.1} complete={:.1}% time={:.4}s",
            summary.label,
            summary.report.s_mean,
            summary.report.unique_s_mean,
            summary.report.distinct[0] * 100.0,
            summary.report.rouge_oracle.r1 * 100.0,
            summary.report.rouge_mean.r1 * 100.0,
            summary.report.completion_rate * 100.0,
            summary.mean_decode_s,
        );
    }
    println!(
        "wrote {}, {}, and {} hypothesis files under {}",
        artifacts.aggregate_csv.display(),
        artifacts.timings_csv.display(),
        artifacts.hypothesis_files.len(),
        config.output_dir.display(),
    );
    Ok(artifacts.failures)
}

fn cmd_mock_server(args: &MockServerArgs) -> Result<(), HarnessError> {
    let model = build_model(&args.model.to_config()?)?;
    if let Some(path) = &args.emit_vocab {
        let vocab = model.vocabulary();
        let surfaces: Vec<&str> = (2..vocab.len() as u32)
            .map(|id| vocab.surface(id).expect("dense ids"))
            .collect();
        std::fs::write(path, surfaces.join("\n") + "\n")
            .map_err(|e| HarnessError::io(path, e))?;
        println!("wrote vocabulary ({} surfaces) to {}", surfaces.len(), path.display());
    }
    let server = MockServer::spawn(model, &args.addr)?;
    println!("serving model on {}", server.url());
    loop {
        std::thread::sleep(std::time::Duration::from_secs(3600));
    }
}

fn run() -> Result<usize, HarnessError> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Decode(args) => cmd_decode(args).map(|()| 0),
        Command::Bench(args) => {
            let config = experiment_config(args, SweepConfig::default())?;
            run_and_report(&config, &args.corpus)
        }
        Command::Sweep(args) => {
            let sweep = SweepConfig {
                kappa: args.kappa_grid.clone(),
                k: args.k_grid.clone(),
                alpha: args.alpha_grid.clone(),
                beam_size: args.beam_grid.clone(),
            };
            let config = experiment_config(&args.bench, sweep)?;
            run_and_report(&config, &args.bench.corpus)
        }
        Command::MockServer(args) => cmd_mock_server(args).map(|()| 0),
        Command::Rerank(args) => {
            let written = rerank_hook(&args.hypotheses, &args.scores, &args.out)?;
            println!(
                "wrote {written} reranked hypotheses to {}",
                args.out.display()
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failures) => {
            eprintln!("{failures} example(s) failed to decode");
            ExitCode::FAILURE
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

//! Acceptance suite: one test per criterion, each printing a PASS line
//! (visible with `--nocapture`). Tolerances are pinned in the asserts.
//!
//! Run with:
//!     cargo test -p bestk-cli --test acceptance -- --nocapture

use std::collections::HashSet;
use std::sync::Arc;
use std::time::Instant;

use bestk_core::baselines::{beam_sample_decode, beam_search, sample_decode, BeamConfig, TokenFilter};
use bestk_core::engine::{bestk_decode, bfs_decode, DecodeConfig, DecodeResult};
use bestk_core::metrics::{distinct_n, rouge_l, rouge_n, tokenize};
use bestk_core::models::synth::{deep_goal_population, random_population};
use bestk_core::models::trie::TrieModel;
use bestk_core::models::{NGramModel, RemoteModel, SequenceModel};
use bestk_core::baselines::{nucleus_filter, typical_filter};
use bestk_core::scoring::{DecayParams, ScoreMode, KAPPA_SWEEP};
use bestk_core::types::{TokenId, BOS, EOS};

use bestk_cli::mockserver::MockServer;

// ── Shared fixtures ────────────────────────────────────────────────────

fn ngram_model() -> NGramModel {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/tiny_corpus.txt");
    let text = std::fs::read_to_string(path).expect("speed corpus ships with the repo");
    NGramModel::train(text.lines(), 3, 0.1).unwrap()
}

/// One dominant root branch plus eleven thin completable ones.
fn dominant_path_trie() -> TrieModel {
    let mut spec = String::from(r#"{"t0": {"prob": 0.8, "children": {"go": {"prob": 1.0}}}"#);
    let thin = 0.2 / 11.0;
    for i in 1..=11 {
        spec.push_str(&format!(r#", "t{i}": {{"prob": {thin}}}"#));
    }
    spec.push('}');
    TrieModel::from_json_str(&spec).unwrap()
}

/// Exhaustive enumeration of all root-to-EOS paths within `max_len`,
/// independent of every decoder under test.
fn all_paths(trie: &TrieModel, max_len: u32) -> Vec<Vec<TokenId>> {
    fn visit(
        trie: &TrieModel,
        node: usize,
        depth: u32,
        max_len: u32,
        path: &mut Vec<TokenId>,
        out: &mut Vec<Vec<TokenId>>,
    ) {
        for &(token, _, child) in trie.children(node) {
            if token == EOS {
                let mut complete = path.clone();
                complete.push(EOS);
                out.push(complete);
            } else if depth + 1 < max_len {
                path.push(token);
                visit(trie, child, depth + 1, max_len, path, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    visit(trie, trie.root(), 0, max_len, &mut vec![BOS], &mut out);
    out.sort();
    out
}

fn completions(result: &DecodeResult) -> Vec<Vec<TokenId>> {
    result.completed.iter().map(|h| h.tokens.clone()).collect()
}

fn completion_rate(
    tries: &[TrieModel],
    mode: ScoreMode,
    kappa: f64,
    k: usize,
    budget: usize,
) -> f64 {
    let complete = tries
        .iter()
        .filter(|trie| {
            let mut config = DecodeConfig::new(k, budget, 12);
            config.score_mode = mode;
            config.decay = DecayParams::new(kappa);
            config.child_cap = Some(5);
            !bestk_decode(*trie, &config).unwrap().incomplete()
        })
        .count();
    complete as f64 / tries.len() as f64
}

// ── Criteria ───────────────────────────────────────────────────────────

#[test]
fn c01_reduction_identity() {
    let started = Instant::now();
    let modes = [
        ScoreMode::Original,
        ScoreMode::LengthAdjusted { alpha: 0.5 },
        ScoreMode::mean(),
        ScoreMode::Memoryless,
    ];
    let tries = random_population(50, 0xC1);
    for (i, trie) in tries.iter().enumerate() {
        let mut config = DecodeConfig::new(1, 60, 8);
        config.score_mode = modes[i % modes.len()];
        config.decay = DecayParams::disabled();
        config.child_threshold = 0.02;
        config.child_cap = Some(3);
        config.frontier_capacity = 100_000;
        let reduction = bestk_decode(trie, &config).unwrap();
        let vanilla = bfs_decode(trie, &config).unwrap();
        assert_eq!(completions(&reduction), completions(&vanilla), "trie {i}");
        for (a, b) in reduction.completed.iter().zip(&vanilla.completed) {
            assert_eq!(a.cum_logprob, b.cum_logprob, "trie {i}");
            assert_eq!(a.model_score, b.model_score, "trie {i}");
        }
        assert_eq!(reduction.explored_count, vanilla.explored_count, "trie {i}");
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 10, "criterion demands < 10 s, took {elapsed:?}");
    println!(
        "[acceptance] c01 reduction identity: PASS (50 tries, zero tolerance, {:.2}s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn c02_exhaustive_search_oracle() {
    let max_len = 10;
    let tries = random_population(50, 0xC2);
    for (i, trie) in tries.iter().enumerate() {
        assert!(trie.leaf_count() <= 100);
        let oracle = all_paths(trie, max_len);

        let mut config = DecodeConfig::new(4, trie.node_count() + 8, max_len);
        config.child_threshold = 0.0;
        config.child_cap = None;
        config.frontier_capacity = trie.node_count() + 8;
        let mut found = completions(&bestk_decode(trie, &config).unwrap());
        found.sort();
        assert_eq!(found, oracle, "trie {i}: best-k vs exhaustive enumeration");

        let mut beam_config = BeamConfig::new(oracle.len().max(1), max_len);
        beam_config.score_mode = ScoreMode::Original;
        let mut found = completions(&beam_search(trie, &beam_config).unwrap());
        found.sort();
        assert_eq!(found, oracle, "trie {i}: beam search vs exhaustive enumeration");
    }
    println!("[acceptance] c02 exhaustive-search oracle: PASS (50 tries, best-k and beam, zero tolerance)");
}

#[test]
fn c03_no_duplication() {
    // 1000 fuzzed best-k runs over 250 tries x 4 jittered configs
    let tries = random_population(250, 0xC3);
    let mut bestk_runs = 0;
    for (i, trie) in tries.iter().enumerate() {
        for variant in 0..4usize {
            let mut config = DecodeConfig::new(1 + (i + variant) % 5, 20 + (i * 7 + variant * 13) % 60, 8);
            config.score_mode = match variant {
                0 => ScoreMode::Original,
                1 => ScoreMode::LengthAdjusted { alpha: 0.5 },
                2 => ScoreMode::mean(),
                _ => ScoreMode::Memoryless,
            };
            config.decay = DecayParams::new([0.0, 0.01, 0.1, 0.2][i % 4]);
            config.child_threshold = [0.0, 0.01, 0.05][variant % 3];
            config.child_cap = if variant == 3 { None } else { Some(2 + variant) };
            let result = bestk_decode(trie, &config).unwrap();
            let mut seen = HashSet::new();
            for hyp in &result.completed {
                assert!(seen.insert(hyp.tokens.clone()), "duplicate in trie {i} variant {variant}");
            }
            bestk_runs += 1;
        }
    }
    assert!(bestk_runs >= 1000);

    // beam search likewise
    let mut beam_runs = 0;
    for (i, trie) in tries.iter().take(125).enumerate() {
        for &b in &[2usize, 6] {
            let mut config = BeamConfig::new(b, 8);
            config.score_mode = if i % 2 == 0 { ScoreMode::Original } else { ScoreMode::mean() };
            let result = beam_search(trie, &config).unwrap();
            let mut seen = HashSet::new();
            for hyp in &result.completed {
                assert!(seen.insert(hyp.tokens.clone()), "beam duplicate in trie {i}");
            }
            beam_runs += 1;
        }
    }

    // sampling duplicates: |S| <= S always, strictly fewer uniques on the
    // dominant-path fixture; best-k finds 10+ uniques at equal budget
    let fixture = dominant_path_trie();
    let sampled = sample_decode(&fixture, TokenFilter::Nucleus(0.9), 10, 12, 11).unwrap();
    let s = sampled.completed.len();
    let unique: HashSet<_> = sampled.completed.iter().map(|h| h.tokens.clone()).collect();
    assert!(unique.len() <= s);
    assert!(unique.len() < s, "expected duplicates, got {} of {s}", unique.len());

    let mut bs_config = BeamConfig::new(10, 12);
    bs_config.sampling = TokenFilter::Nucleus(0.5);
    bs_config.seed = 11;
    let beam_sampled = beam_sample_decode(&fixture, &bs_config).unwrap();
    let bs_unique: HashSet<_> = beam_sampled
        .completed
        .iter()
        .map(|h| h.tokens.clone())
        .collect();
    assert!(bs_unique.len() <= 3, "beam-sample found {}", bs_unique.len());

    let mut bk_config = DecodeConfig::new(5, 10 * 12, 12);
    bk_config.child_threshold = 0.01;
    bk_config.child_cap = Some(12);
    bk_config.score_mode = ScoreMode::mean();
    let bk = bestk_decode(&fixture, &bk_config).unwrap();
    let bk_unique: HashSet<_> = bk.completed.iter().map(|h| h.tokens.clone()).collect();
    assert!(bk_unique.len() >= 10, "best-k found {}", bk_unique.len());

    println!(
        "[acceptance] c03 no-duplication: PASS ({bestk_runs} best-k runs, {beam_runs} beam runs; \
         sampling |S|={} < S={s}; beam-sample |S|={} vs best-k |S|={})",
        unique.len(),
        bs_unique.len(),
        bk_unique.len()
    );
}

#[test]
fn c04_batch_economy() {
    let model = ngram_model();
    let budget = 300;
    let config_for = |k: usize| {
        let mut config = DecodeConfig::new(k, budget, 30);
        config.score_mode = ScoreMode::LengthAdjusted { alpha: 0.5 };
        config.decay = DecayParams::new(0.1);
        config.child_cap = Some(10);
        config.child_threshold = 0.0;
        config
    };

    // ledger bound over the sweep grid
    for k in [1usize, 5, 10] {
        let result = bestk_decode(&model, &config_for(k)).unwrap();
        let bound = budget.div_ceil(k) + 1;
        assert!(
            result.model_batch_calls <= bound,
            "k={k}: {} batch calls exceed ceil({budget}/{k})+1 = {bound}",
            result.model_batch_calls
        );
        assert_eq!(result.rounds, result.model_batch_calls);
    }

    // interleaved runs; the per-side minimum is the least-noise estimate
    // when sibling tests are competing for cores
    let reps = 15;
    let mut narrow = Vec::with_capacity(reps);
    let mut wide = Vec::with_capacity(reps);
    for _ in 0..reps {
        let started = Instant::now();
        let _ = bestk_decode(&model, &config_for(1)).unwrap();
        narrow.push(started.elapsed().as_secs_f64());
        let started = Instant::now();
        let _ = bestk_decode(&model, &config_for(10)).unwrap();
        wide.push(started.elapsed().as_secs_f64());
    }
    let floor = |times: &[f64]| times.iter().copied().fold(f64::INFINITY, f64::min);
    let (k1, k10) = (floor(&narrow), floor(&wide));
    let speedup = k1 / k10;
    assert!(
        speedup >= 3.0,
        "k=10 must be at least 3x faster than k=1 at equal budget; got {speedup:.2}x ({k1:.4}s vs {k10:.4}s)"
    );
    println!(
        "[acceptance] c04 batch economy: PASS (batch calls within ceil(C/k)+1 for k in {{1,5,10}}; \
         k=10 speedup {speedup:.2}x >= 3x)"
    );
}

#[test]
fn c05_decay_completion_trend() {
    let tries = deep_goal_population(200, 777);
    let mode = ScoreMode::LengthAdjusted { alpha: 0.5 };
    let rates: Vec<f64> = KAPPA_SWEEP
        .iter()
        .map(|&kappa| completion_rate(&tries, mode, kappa, 5, 30))
        .collect();
    let (lo, hi) = (rates[0], rates[rates.len() - 1]);
    assert!(
        hi - lo >= 0.10,
        "kappa=0.2 must beat kappa=0 by >= 10 points; got {lo:.3} -> {hi:.3}"
    );
    for window in rates.windows(2) {
        assert!(
            window[1] >= window[0] - 0.02,
            "completion rate regressed beyond the 2pp noise band: {rates:?}"
        );
    }
    println!(
        "[acceptance] c05 decay-completion trend: PASS (alpha=0.5 rates across kappa grid {rates:?})"
    );
}

#[test]
fn c06_budget_completion_trend() {
    let tries = deep_goal_population(200, 777);
    let max_len = 12u32;
    let mut incompletion = Vec::new();
    for b in [1usize, 2, 5, 10] {
        let incomplete = tries
            .iter()
            .filter(|trie| {
                let mut config = DecodeConfig::new(1, b * max_len as usize, max_len);
                config.score_mode = ScoreMode::LengthAdjusted { alpha: 0.5 };
                config.child_cap = Some(5);
                bfs_decode(*trie, &config).unwrap().incomplete()
            })
            .count();
        incompletion.push(incomplete as f64 / tries.len() as f64);
    }
    for window in incompletion.windows(2) {
        assert!(
            window[1] < window[0],
            "incompletion must strictly decrease with the budget: {incompletion:?}"
        );
    }
    println!(
        "[acceptance] c06 budget-completion trend: PASS (vanilla BFS incompletion over b=1,2,5,10: {incompletion:?})"
    );
}

#[test]
fn c07_scoring_failure_reproduction() {
    let tries = deep_goal_population(200, 777);
    let modes = [
        ("alpha=0", ScoreMode::LengthAdjusted { alpha: 0.0 }),
        ("alpha=0.5", ScoreMode::LengthAdjusted { alpha: 0.5 }),
        ("alpha=1", ScoreMode::LengthAdjusted { alpha: 1.0 }),
        ("memoryless", ScoreMode::Memoryless),
    ];
    // per mode, the best completion rate across the decay grid
    let best_rates: Vec<(&str, f64)> = modes
        .iter()
        .map(|&(name, mode)| {
            let best = KAPPA_SWEEP
                .iter()
                .map(|&kappa| completion_rate(&tries, mode, kappa, 5, 50))
                .fold(0.0f64, f64::max);
            (name, best)
        })
        .collect();
    let original = best_rates[0].1;
    for &(name, rate) in &best_rates[1..] {
        assert!(
            original < rate,
            "unadjusted scoring must complete worst: alpha=0 at {original:.3} vs {name} at {rate:.3}"
        );
    }
    println!("[acceptance] c07 scoring-failure reproduction: PASS (best rates {best_rates:?})");
}

#[test]
fn c08_metric_unit_suite() {
    let tolerance = 1e-9;
    let outputs = vec![tokenize("the cat"), tokenize("the dog")];
    assert!((distinct_n(&outputs, 1) - 0.75).abs() < tolerance);

    assert!((rouge_n(&tokenize("a b c"), &[tokenize("a b")], 1) - 0.8).abs() < tolerance);
    assert!((rouge_l(&tokenize("a x b"), &[tokenize("a b")]) - 0.8).abs() < tolerance);
    assert!((rouge_l(&tokenize("b a"), &[tokenize("a b")]) - 0.5).abs() < tolerance);

    let kept = nucleus_filter(&[(2, 0.5), (3, 0.3), (4, 0.2)], 0.7).unwrap();
    assert_eq!(kept.len(), 2);
    assert!((kept[0].1 - 0.625).abs() < tolerance);
    assert!((kept[1].1 - 0.375).abs() < tolerance);

    let kept = typical_filter(&[(2, 0.25), (3, 0.25), (4, 0.25), (5, 0.25)], 0.5).unwrap();
    assert_eq!(kept.len(), 2);
    assert_eq!((kept[0].0, kept[1].0), (2, 3));
    assert!((kept[0].1 - 0.5).abs() < tolerance);
    assert!((kept[1].1 - 0.5).abs() < tolerance);

    println!("[acceptance] c08 metric unit suite: PASS (all worked examples at 1e-9)");
}

#[test]
fn c09_determinism_byte_identical_csv() {
    use bestk_cli::config::*;
    use bestk_cli::corpus::ingest_corpus;
    use bestk_cli::runner::{build_model, run_experiment, SharedModel};

    let dir = tempfile::tempdir().unwrap();
    let corpus_path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/tiny.jsonl");
    let corpus = ingest_corpus(std::path::Path::new(corpus_path), true).unwrap();

    for strategy in [
        StrategyConfig::Bestk {
            k: 5,
            score: ScoreMode::LengthAdjusted { alpha: 0.5 },
            kappa: 0.05,
            beta: 0.5,
            gamma: 0.01,
            child_cap: None,
            frontier_capacity: 500,
            depth_bonus: 0.0,
        },
        StrategyConfig::Sample {
            filter: FilterConfig::Nucleus { p: 0.9 },
            num_samples: None,
        },
    ] {
        let config = ExperimentConfig {
            strategy,
            model: ModelConfig::Ngram {
                corpus: concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/tiny_corpus.txt").into(),
                order: 3,
                add_k: 0.1,
            },
            budget: BudgetConfig { beam_size: 10, max_len: 12 },
            sweep: SweepConfig {
                kappa: None,
                k: None,
                alpha: None,
                beam_size: Some(vec![5, 10]),
            },
            output_dir: dir.path().to_path_buf(),
            seed: 42,
            workers: 2,
            extra_terminators: Default::default(),
        };
        let model = build_model(&config.model).unwrap();
        let first = run_experiment(&config, &corpus, &SharedModel(model.clone())).unwrap();
        let manifest_a = std::fs::read(&first.manifest).unwrap();
        let csv_a = std::fs::read(&first.aggregate_csv).unwrap();
        let second = run_experiment(&config, &corpus, &SharedModel(model)).unwrap();
        let manifest_b = std::fs::read(&second.manifest).unwrap();
        let csv_b = std::fs::read(&second.aggregate_csv).unwrap();
        assert_eq!(manifest_a, manifest_b, "manifests must agree");
        assert_eq!(csv_a, csv_b, "aggregate CSVs must be byte-identical");
    }
    println!("[acceptance] c09 determinism: PASS (byte-identical aggregate CSVs, deterministic and seeded strategies)");
}

#[test]
fn c10_remote_protocol_conformance() {
    let backing = Arc::new(ngram_model());
    let server = MockServer::spawn(backing.clone(), "127.0.0.1:0").unwrap();
    let client = RemoteModel::new(server.url(), backing.vocabulary().clone());

    let vocab_len = backing.vocabulary().len() as TokenId;
    let mut state = 0x2545F4914F6CDD1Du64;
    let mut next = move |bound: u64| {
        // xorshift is plenty for fuzzing batch shapes
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state % bound
    };

    for round in 0..100 {
        let batch_len = 1 + next(8) as usize;
        let prefixes: Vec<Vec<TokenId>> = (0..batch_len)
            .map(|_| {
                let mut prefix = vec![BOS];
                for _ in 0..next(6) {
                    prefix.push(2 + (next(u64::from(vocab_len) - 2) as TokenId));
                }
                prefix
            })
            .collect();
        let views: Vec<&[TokenId]> = prefixes.iter().map(Vec::as_slice).collect();
        let via_wire = client.remote_next(&views).unwrap();
        let direct = backing.next_logprobs(&views).unwrap();
        assert_eq!(via_wire, direct, "round {round}: batch order or payload drifted");
    }

    // the id echo, checked on the raw wire
    let raw = ureq::AgentBuilder::new().build();
    let body = serde_json::json!({"prefixes": [[0]], "request_id": "check-echo-77"});
    let reply: serde_json::Value = raw
        .post(&server.url())
        .set("content-type", "application/json")
        .send_string(&body.to_string())
        .unwrap()
        .into_json()
        .unwrap();
    assert_eq!(reply["request_id"], "check-echo-77");

    server.stop();
    println!("[acceptance] c10 remote protocol conformance: PASS (100 randomized batches, order preserved, request_id echoed)");
}

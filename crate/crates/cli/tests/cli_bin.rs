//! Tests that drive the compiled `bestk` binary.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bestk() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bestk"))
}

fn data(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(file)
}

#[test]
fn decode_prints_parseable_jsonl() {
    let output = bestk()
        .args(["decode", "--model", "trie", "--model-path"])
        .arg(data("demo_trie.json"))
        .args(["--strategy", "bestk", "--k", "2", "--score", "mean", "-b", "4", "--max-len", "8"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 7, "the demo trie has seven completions");
    for line in lines {
        let record: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(record["example_id"], "cli");
        assert!(record["cum_logprob"].as_f64().unwrap() <= 0.0);
    }
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("artifacts");
    let config = serde_json::json!({
        "strategy": {"kind": "beam", "score": {"mode": "length-adjusted", "alpha": 1.0}},
        "model": {
            "kind": "ngram",
            "corpus": data("tiny_corpus.txt"),
            "order": 2,
            "add_k": 0.5
        },
        "budget": {"beam_size": 4, "max_len": 8},
        "output_dir": out_dir,
        "seed": 3
    });
    let config_path = dir.path().join("experiment.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    // the flags ask for a trie decode into a different directory; the
    // config file must win
    let output = bestk()
        .args(["bench", "--corpus"])
        .arg(data("tiny.jsonl"))
        .args(["--out", "/nonexistent/ignored", "--model", "trie", "--model-path", "/nope.json"])
        .arg("--config")
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    assert!(out_dir.join("aggregate.csv").exists());
    assert!(out_dir.join("timings.csv").exists());
    assert!(out_dir.join("manifest.json").exists());
    let aggregate = std::fs::read_to_string(out_dir.join("aggregate.csv")).unwrap();
    assert!(aggregate.lines().nth(1).unwrap().starts_with("beam_b4,beam,4,"));
}

#[test]
fn corpus_errors_name_the_line_and_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("broken.jsonl");
    std::fs::write(&corpus, "{\"id\": \"a\", \"references\": [\"x\"]}\n{\"id\": \"a\"}\n").unwrap();
    let output = bestk()
        .args(["bench", "--corpus"])
        .arg(&corpus)
        .args(["--out"])
        .arg(dir.path().join("out"))
        .args(["--model", "ngram", "--model-path"])
        .arg(data("tiny_corpus.txt"))
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("line 2"), "stderr was: {stderr}");
}

#[test]
fn rerank_round_trips_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let hyps = dir.path().join("hyps.jsonl");
    std::fs::write(
        &hyps,
        concat!(
            r#"{"id":"e:0","example_id":"e","rank":0,"tokens":["a"],"cum_logprob":-1.0,"model_score":-1.0,"complete":true,"truncated":false}"#,
            "\n",
            r#"{"id":"e:1","example_id":"e","rank":1,"tokens":["b"],"cum_logprob":-2.0,"model_score":-2.0,"complete":true,"truncated":false}"#,
            "\n"
        ),
    )
    .unwrap();
    let scores = dir.path().join("scores.json");
    std::fs::write(&scores, r#"{"e:0": 0.1, "e:1": 0.9}"#).unwrap();
    let out = dir.path().join("reranked.jsonl");
    let output = bestk()
        .args(["rerank", "--hypotheses"])
        .arg(&hyps)
        .arg("--scores")
        .arg(&scores)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    let text = std::fs::read_to_string(&out).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["id"], "e:1");
    assert_eq!(first["original_rank"], 1);
    assert_eq!(first["rank"], 0);

    // a missing score id fails loudly
    std::fs::write(&scores, r#"{"e:0": 0.1}"#).unwrap();
    let output = bestk()
        .args(["rerank", "--hypotheses"])
        .arg(&hyps)
        .arg("--scores")
        .arg(&scores)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("e:1"), "stderr was: {stderr}");
}

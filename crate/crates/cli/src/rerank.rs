//! Reordering hypothesis files by externally supplied scores.
//!
//! The scoring model itself lives out of process; this hook only takes a
//! JSON map of hypothesis id to score and stably re-sorts each example's
//! hypotheses, best external score first, recording the original rank.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::error::HarnessError;
use crate::runner::HypRecord;

pub fn read_hypotheses(path: &Path) -> Result<Vec<HypRecord>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let mut records = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        records.push(serde_json::from_str(line)?);
    }
    Ok(records)
}

/// Applies external scores to a hypothesis list. Every hypothesis must
/// have a score; missing ids fail loudly, listing all of them.
pub fn rerank(
    records: Vec<HypRecord>,
    scores: &HashMap<String, f64>,
) -> Result<Vec<HypRecord>, HarnessError> {
    let missing: Vec<String> = records
        .iter()
        .filter(|r| !scores.contains_key(&r.id))
        .map(|r| r.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(HarnessError::MissingScores { ids: missing });
    }

    // preserve the example grouping; rerank within each example
    let mut example_order: Vec<String> = Vec::new();
    let mut grouped: HashMap<String, Vec<HypRecord>> = HashMap::new();
    for record in records {
        if !grouped.contains_key(&record.example_id) {
            example_order.push(record.example_id.clone());
        }
        grouped.entry(record.example_id.clone()).or_default().push(record);
    }

    let mut out = Vec::new();
    for example_id in example_order {
        let mut group = grouped.remove(&example_id).expect("grouped above");
        // stable: equal external scores keep their original order
        group.sort_by(|a, b| scores[&b.id].total_cmp(&scores[&a.id]));
        for (rank, mut record) in group.into_iter().enumerate() {
            record.original_rank = Some(record.rank);
            record.external_score = Some(scores[&record.id]);
            record.rank = rank;
            out.push(record);
        }
    }
    Ok(out)
}

/// File-to-file wrapper: hypotheses JSONL + scores JSON map -> reordered
/// JSONL.
pub fn rerank_hook(
    hypotheses: &Path,
    score_file: &Path,
    out_path: &Path,
) -> Result<usize, HarnessError> {
    let records = read_hypotheses(hypotheses)?;
    let text = std::fs::read_to_string(score_file).map_err(|e| HarnessError::io(score_file, e))?;
    let scores: HashMap<String, f64> = serde_json::from_str(&text)?;
    let reranked = rerank(records, &scores)?;
    let mut file = std::fs::File::create(out_path).map_err(|e| HarnessError::io(out_path, e))?;
    for record in &reranked {
        let line = serde_json::to_string(record)?;
        writeln!(file, "{line}").map_err(|e| HarnessError::io(out_path, e))?;
    }
    Ok(reranked.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(example: &str, rank: usize) -> HypRecord {
        HypRecord {
            id: format!("{example}:{rank}"),
            example_id: example.to_string(),
            rank,
            tokens: vec![format!("w{rank}")],
            cum_logprob: -1.0,
            model_score: -1.0,
            complete: true,
            truncated: false,
            original_rank: None,
            external_score: None,
        }
    }

    #[test]
    fn scores_reverse_the_order() {
        let records = vec![record("e", 0), record("e", 1), record("e", 2)];
        let scores: HashMap<String, f64> =
            [("e:0", 1.0), ("e:1", 2.0), ("e:2", 3.0)]
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect();
        let out = rerank(records, &scores).unwrap();
        let ids: Vec<&str> = out.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["e:2", "e:1", "e:0"]);
        assert_eq!(out[0].rank, 0);
        assert_eq!(out[0].original_rank, Some(2));
    }

    #[test]
    fn equal_scores_keep_the_original_order() {
        let records = vec![record("e", 0), record("e", 1), record("e", 2)];
        let scores: HashMap<String, f64> = [("e:0", 5.0), ("e:1", 5.0), ("e:2", 5.0)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect();
        let out = rerank(records, &scores).unwrap();
        let ids: Vec<&str> = out.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["e:0", "e:1", "e:2"]);
    }

    #[test]
    fn missing_ids_are_listed() {
        let records = vec![record("e", 0), record("e", 1)];
        let scores: HashMap<String, f64> =
            [("e:0".to_string(), 1.0)].into_iter().collect();
        match rerank(records, &scores).unwrap_err() {
            HarnessError::MissingScores { ids } => assert_eq!(ids, vec!["e:1".to_string()]),
            other => panic!("unexpected error {other}"),
        }
    }
}

//! Corpus ingestion: one JSON object per line with `id`, `input`, and
//! `references`.

use std::collections::HashSet;
use std::path::Path;

use serde::Deserialize;

use crate::error::HarnessError;

#[derive(Debug, Clone)]
pub struct Example {
    pub id: String,
    /// Opaque conditioning input; toy backends ignore it.
    pub input: String,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub examples: Vec<Example>,
}

#[derive(Deserialize)]
struct RawExample {
    id: String,
    #[serde(default)]
    input: String,
    references: Option<Vec<String>>,
}

/// Parses a JSONL corpus. With `require_references` every example must
/// carry at least one reference (metrics runs); errors name the line.
pub fn ingest_corpus(path: &Path, require_references: bool) -> Result<Corpus, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    ingest_corpus_str(&text, require_references)
}

pub fn ingest_corpus_str(text: &str, require_references: bool) -> Result<Corpus, HarnessError> {
    let mut corpus = Corpus::default();
    let mut seen: HashSet<String> = HashSet::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let raw: RawExample =
            serde_json::from_str(raw_line).map_err(|e| HarnessError::Ingestion {
                line,
                message: e.to_string(),
            })?;
        if !seen.insert(raw.id.clone()) {
            return Err(HarnessError::Ingestion {
                line,
                message: format!("duplicate example id {:?}", raw.id),
            });
        }
        let references = raw.references.unwrap_or_default();
        if require_references && references.is_empty() {
            return Err(HarnessError::Ingestion {
                line,
                message: format!("example {:?} has no references", raw.id),
            });
        }
        corpus.examples.push(Example {
            id: raw.id,
            input: raw.input,
            references,
        });
    }
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_valid_lines_ingest() {
        let text = r#"{"id": "e1", "input": "x", "references": ["a b"]}
{"id": "e2", "input": "y", "references": ["c d", "e f"]}"#;
        let corpus = ingest_corpus_str(text, true).unwrap();
        assert_eq!(corpus.examples.len(), 2);
        assert_eq!(corpus.examples[1].references.len(), 2);
    }

    #[test]
    fn missing_references_fail_only_when_required() {
        let text = r#"{"id": "e1", "input": "x"}"#;
        assert!(ingest_corpus_str(text, false).is_ok());
        let err = ingest_corpus_str(text, true).unwrap_err();
        match err {
            HarnessError::Ingestion { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn duplicate_ids_are_rejected_with_the_line_number() {
        let text = r#"{"id": "e1", "references": ["a"]}
{"id": "e1", "references": ["b"]}"#;
        let err = ingest_corpus_str(text, true).unwrap_err();
        match err {
            HarnessError::Ingestion { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("duplicate"));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn malformed_lines_name_their_position() {
        let text = "{\"id\": \"e1\", \"references\": [\"a\"]}\nnot json";
        let err = ingest_corpus_str(text, true).unwrap_err();
        match err {
            HarnessError::Ingestion { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }
}

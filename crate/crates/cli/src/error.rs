use thiserror::Error;

use bestk_core::ModelError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("corpus line {line}: {message}")]
    Ingestion { line: usize, message: String },
    #[error("missing external scores for hypothesis ids: {}", ids.join(", "))]
    MissingScores { ids: Vec<String> },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

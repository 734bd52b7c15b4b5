//! JSON-lines files: one value per non-blank line.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{path}: {kind}")]
    Io {
        path: PathBuf,
        #[source]
        kind: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

/// Reads every non-blank line of `path` as a `T`. Line numbers in errors
/// are 1-based.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let text = fs::read_to_string(path).map_err(|kind| JsonlError::Io {
        path: path.to_owned(),
        kind,
    })?;
    parse_jsonl(&text).map_err(|(line, message)| JsonlError::Parse {
        path: path.to_owned(),
        line,
        message,
    })
}

/// Parses JSON-lines text; errors carry the 1-based line number.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, (usize, String)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| (i + 1, e.to_string())))
        .collect()
}

/// One compact JSON value per line, each terminated by a newline.
pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    let mut out = String::new();
    for it in items {
        out.push_str(&serde_json::to_string(it).expect("value serializes"));
        out.push('\n');
    }
    out
}

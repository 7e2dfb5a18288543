//! Versioned JSON manifests describing what a run read, wrote and failed on.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// One failed input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileError {
    pub file: String,
    pub error: String,
}

/// Run record: every input appears exactly once — as an entry, as an error,
/// or in `inputs` for commands whose entries fan out per input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest<E> {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    /// Input stems, present when entries are not one-to-one with inputs.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub inputs: Option<Vec<String>>,
    pub entries: Vec<E>,
    pub errors: Vec<FileError>,
}

impl<E: Serialize> Manifest<E> {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            command: command.to_string(),
            seed,
            inputs: None,
            entries: Vec::new(),
            errors: Vec::new(),
        }
    }

    /// Write as pretty JSON to `dir/manifest.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).context("serializing manifest")?;
        std::fs::write(&path, text + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

/// Split per-file outcomes into manifest entries and errors, in input order.
pub fn partition_outcomes<E>(
    outcomes: Vec<(String, anyhow::Result<E>)>,
) -> (Vec<E>, Vec<FileError>) {
    let mut entries = Vec::new();
    let mut errors = Vec::new();
    for (file, outcome) in outcomes {
        match outcome {
            Ok(entry) => entries.push(entry),
            Err(e) => errors.push(FileError {
                file,
                error: format!("{e:#}"),
            }),
        }
    }
    (entries, errors)
}

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use thematic_fit::ingest::IngestReport;

use crate::config::RunConfig;
use crate::error::CliError;

/// Per-input counters for a build manifest.
#[derive(Debug, Serialize)]
pub struct InputSummary {
    pub path: String,
    pub format: &'static str,
    pub lines: u64,
    pub sentences: u64,
    pub edges: u64,
    pub multiplicity: u64,
    pub skipped_lines: u64,
    pub first_errors: Vec<String>,
}

impl InputSummary {
    pub fn new(path: &Path, format: &'static str, report: &IngestReport) -> Self {
        Self {
            path: path.display().to_string(),
            format,
            lines: report.lines,
            sentences: report.sentences,
            edges: report.edges,
            multiplicity: report.multiplicity,
            skipped_lines: report.skipped_lines,
            first_errors: report.errors.iter().take(10).map(|e| e.to_string()).collect(),
        }
    }
}

/// A JSON record of what a command did and with which effective settings.
#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a RunConfig,
    pub inputs: Vec<InputSummary>,
    pub output: Value,
}

impl<'a> Manifest<'a> {
    pub fn new(command: &'static str, config: &'a RunConfig) -> Self {
        Self { tool: "tfk", version: env!("CARGO_PKG_VERSION"), command, config, inputs: Vec::new(), output: Value::Null }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(self).map_err(CliError::data)?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

/// `store.tfk` gets `store.tfk.manifest.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

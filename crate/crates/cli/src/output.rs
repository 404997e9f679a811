//! Report files. Every artifact carries the tool version, the effective
//! configuration and the master seed.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use pacr_core::harness::config::ExperimentConfig;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Provenance<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: &'a ExperimentConfig,
    pub seed: u64,
}

impl<'a> Provenance<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Self {
        Provenance {
            tool: "pacr",
            version: env!("CARGO_PKG_VERSION"),
            config,
            seed: config.seed,
        }
    }

    /// `#`-prefixed header lines for text artifacts.
    pub fn comment_lines(&self) -> String {
        format!(
            "# {} {}\n# seed: {}\n# config: {}\n",
            self.tool,
            self.version,
            self.seed,
            serde_json::to_string(self.config).expect("config serializes")
        )
    }
}

#[derive(Serialize)]
struct WithProvenance<'a, T: Serialize> {
    provenance: &'a Provenance<'a>,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Pretty JSON object with a `provenance` field followed by the fields of
/// `body`.
pub fn write_json<T: Serialize>(path: &Path, provenance: &Provenance, body: &T) -> Result<()> {
    let doc = WithProvenance { provenance, body };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    write_text(path, &text)
}

/// One JSON object per line, led by a provenance record.
pub fn write_jsonl<T: Serialize>(path: &Path, provenance: &Provenance, items: &[T]) -> Result<()> {
    let mut text = serde_json::to_string(&serde_json::json!({
        "event": "provenance",
        "provenance": provenance,
    }))?;
    text.push('\n');
    for item in items {
        text.push_str(&serde_json::to_string(item)?);
        text.push('\n');
    }
    write_text(path, &text)
}

/// CSV with `#` provenance lines before the header row.
pub fn write_csv(path: &Path, provenance: &Provenance, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(provenance.comment_lines().into_bytes());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?;
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

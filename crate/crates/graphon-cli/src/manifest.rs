//! Run manifest: written before any result file, rewritten on success.
//!
//! The manifest makes every output directory self-describing: it echoes the
//! fully resolved configuration, the code version, the root seed, and the
//! artifact list. It is written with status `incomplete` before the
//! subcommand runs, so a crash mid-run leaves an honest marker behind; on
//! success it is rewritten with status `complete` and the same start
//! timestamp. The timestamp is the only line that differs between two runs
//! of the same configuration and seed.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
struct ManifestBody<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    status: &'a str,
    timestamp_unix_seconds: u64,
    artifacts: &'a [String],
    config: &'a RunConfig,
}

/// Tracks one run's manifest file through its incomplete → complete
/// lifecycle.
pub struct Manifest {
    path: PathBuf,
    command: String,
    seed: u64,
    timestamp: u64,
    artifacts: Vec<String>,
}

impl Manifest {
    /// Write the incomplete manifest into `out_dir` before anything else.
    pub fn start(out_dir: &Path, command: &str, config: &RunConfig) -> Result<Self> {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = Self {
            path: out_dir.join(MANIFEST_FILE),
            command: command.to_owned(),
            seed: config.seed,
            timestamp,
            artifacts: Vec::new(),
        };
        manifest.write("incomplete", config)?;
        Ok(manifest)
    }

    /// Record one artifact (file name relative to the output directory).
    pub fn record(&mut self, file_name: &str) {
        self.artifacts.push(file_name.to_owned());
    }

    /// Rewrite the manifest as complete, listing every artifact written.
    pub fn finish(&self, config: &RunConfig) -> Result<()> {
        self.write("complete", config)
    }

    fn write(&self, status: &str, config: &RunConfig) -> Result<()> {
        let body = ManifestBody {
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            status,
            timestamp_unix_seconds: self.timestamp,
            artifacts: &self.artifacts,
            config,
        };
        let text = serde_json::to_string_pretty(&body)?;
        fs::write(&self.path, text + "\n")
            .with_context(|| format!("cannot write {}", self.path.display()))
    }
}

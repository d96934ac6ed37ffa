//! Run manifests: every subcommand records what it ran and what it wrote.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use emisim_core::Result;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    /// Input label -> path or literal value.
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    /// Paths written, relative to the manifest's directory.
    pub outputs: Vec<String>,
    pub tool_version: String,
    pub started_unix_s: f64,
    pub finished_unix_s: f64,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn start(subcommand: &str, seed: u64) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            inputs: BTreeMap::new(),
            seed,
            outputs: Vec::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix_s: now(),
            finished_unix_s: 0.0,
        }
    }

    pub fn input(&mut self, label: &str, value: impl ToString) -> &mut Self {
        self.inputs.insert(label.to_string(), value.to_string());
        self
    }

    pub fn output(&mut self, rel_path: &str) -> &mut Self {
        self.outputs.push(rel_path.to_string());
        self
    }

    /// Finalize and write `manifest.json` into `dir`.
    pub fn write(mut self, dir: &Path) -> Result<()> {
        self.finished_unix_s = now();
        self.outputs.push("manifest.json".to_string());
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }
}

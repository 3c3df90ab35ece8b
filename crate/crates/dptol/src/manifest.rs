//! Run manifests: everything needed to repeat a command exactly.

use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use dptol_core::tolerance::ToleranceSpec;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::method::MethodSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableFormat {
    Csv,
    Markdown,
}

/// A command with every parameter resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Fit {
        input: PathBuf,
        column: Option<String>,
        method: MethodSpec,
        spec: ToleranceSpec,
        seed: u64,
        json: bool,
    },
    Simulate {
        config: ExperimentConfig,
        format: TableFormat,
    },
    Potency {
        seed: u64,
        json: bool,
    },
}

impl Command {
    pub fn seed(&self) -> u64 {
        match self {
            Command::Fit { seed, .. } | Command::Potency { seed, .. } => *seed,
            Command::Simulate { config, .. } => config.master_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub seed: u64,
    /// Milliseconds since the Unix epoch.
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    /// sha256 of the input file, for `fit`.
    pub input_digest: Option<String>,
    pub percentile_method: String,
}

pub fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: Command, started_unix_ms: u128, input_digest: Option<String>) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: command.seed(),
            command,
            started_unix_ms,
            finished_unix_ms: now_ms(),
            input_digest,
            percentile_method: "type7".into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("manifest: {e}"))
    }
}

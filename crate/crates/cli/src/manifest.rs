use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance block embedded in every JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: &'static str,
    /// SHA-256 of each input file, in argument order.
    pub input_sha256: Vec<String>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn start<C: Serialize>(command: &str, config: &C, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            config: serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
            seed,
            version: VERSION,
            input_sha256: Vec::new(),
            started_at: now(),
            finished_at: String::new(),
        }
    }

    pub fn add_input(&mut self, bytes: &[u8]) {
        self.input_sha256.push(sha256_hex(bytes));
    }

    pub fn finish(mut self) -> Self {
        self.finished_at = now();
        self
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

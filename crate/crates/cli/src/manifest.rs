use std::path::Path;

use cartography::config::{load_config, render_config};
use cartography::harness::HarnessConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Reproducibility header stamped on every output artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// `None` when running on built-in defaults.
    pub config_path: Option<String>,
    /// SHA-256 of the config file bytes, or of the rendered defaults.
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub version: String,
}

impl RunManifest {
    pub fn json_line(&self) -> String {
        serde_json::json!({ "manifest": self }).to_string()
    }

    /// Comment line heading a TSV table.
    pub fn tsv_comment(&self) -> String {
        format!("# manifest {}", serde_json::to_string(self).expect("manifest serializes"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Loads the config (explicit path, then the environment variable, then
/// defaults) and the manifest describing it.
pub fn load(command: &str, explicit: Option<&Path>, seeds: Vec<u64>) -> Result<(HarnessConfig, RunManifest), CliError> {
    let path = cartography::config::resolve_config_path(explicit);
    let (config, hash) = match &path {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            (load_config(p)?, sha256_hex(&bytes))
        }
        None => {
            let cfg = HarnessConfig::default();
            let hash = sha256_hex(render_config(&cfg).as_bytes());
            (cfg, hash)
        }
    };
    let manifest = RunManifest {
        command: command.into(),
        config_path: path.map(|p| p.display().to_string()),
        seeds,
        version: cartography::VERSION.into(),
        config_sha256: hash,
    };
    Ok((config, manifest))
}

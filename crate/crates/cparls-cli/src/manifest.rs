//! Run manifests: enough resolved state to re-run any command exactly.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub input_path: Option<String>,
    pub input_sha256: Option<String>,
    /// Fully resolved configuration, after config-file merge and defaults.
    pub config: BTreeMap<String, toml::Value>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            input_path: None,
            input_sha256: None,
            config: BTreeMap::new(),
            outputs: Vec::new(),
        }
    }

    pub fn with_input(mut self, path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{:02x}", b)).collect();
        self.input_path = Some(path.display().to_string());
        self.input_sha256 = Some(hex);
        Ok(self)
    }

    pub fn set<V: Into<toml::Value>>(&mut self, key: &str, value: V) {
        self.config.insert(key.to_string(), value.into());
    }

    pub fn add_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = toml::to_string(self).map_err(std::io::Error::other)?;
        std::fs::write(path, text)
    }
}

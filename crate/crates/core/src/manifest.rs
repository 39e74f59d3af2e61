//! Run manifests: a JSON record of the command, its configuration, the seed
//! and digests of every input file.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::Result;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Full command line, excluding the program name.
    pub arguments: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub threads: Option<usize>,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub library_version: String,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, arguments: Vec<String>, config: serde_json::Value, seed: u64) -> Self {
        RunManifest {
            command: command.to_string(),
            arguments,
            config,
            seed,
            threads: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            duration_seconds: 0.0,
        }
    }

    /// Records the SHA-256 digest of an input file.
    pub fn add_input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    /// Writes `manifest.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.as_ref().join(MANIFEST_FILE), text + "\n")?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Lower-case hex SHA-256 of a file's bytes.
pub fn sha256_file(path: impl AsRef<Path>) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

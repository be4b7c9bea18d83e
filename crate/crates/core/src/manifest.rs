//! Run manifests: what went in, what came out, and with which settings.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hex SHA-256 of a file's contents.
pub fn file_digest(path: &Path) -> Result<String> {
    let mut file = File::open(path).map_err(|source| Error::Ingest {
        path: path.to_path_buf(),
        source,
    })?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn bytes_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: String,
    /// Digest of the canonical JSON of `config`.
    pub config_hash: String,
    pub config: serde_json::Value,
    /// Input path to content digest.
    pub inputs: BTreeMap<String, String>,
    pub counts: serde_json::Value,
    /// Output file name to content digest.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new<C: Serialize>(command: &str, config: &C) -> Result<Manifest> {
        let config = serde_json::to_value(config)?;
        Ok(Manifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: bytes_digest(serde_json::to_string(&config)?.as_bytes()),
            config,
            inputs: BTreeMap::new(),
            counts: serde_json::Value::Null,
            outputs: BTreeMap::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), file_digest(path)?);
        Ok(())
    }

    /// Record every regular file in `dir` except the manifest itself.
    pub fn outputs_in(&mut self, dir: &Path) -> Result<()> {
        let mut names: Vec<_> = std::fs::read_dir(dir)?
            .collect::<io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|e| e.path().is_file() && e.file_name() != "manifest.json")
            .collect();
        names.sort_by_key(|e| e.file_name());
        for e in names {
            self.outputs.insert(e.file_name().to_string_lossy().into_owned(), file_digest(&e.path())?);
        }
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

//! Run manifests: enough to repeat a run and check that its outputs match.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::report::to_json;
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path, label: impl Into<String>) -> Result<FileDigest> {
    Ok(FileDigest { path: label.into(), sha256: sha256_hex(&std::fs::read(path)?) })
}

/// Collects the files of one run and writes `manifest.json` last.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    outputs: Vec<FileDigest>,
}

impl RunWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.into(), outputs: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        self.outputs.push(FileDigest { path: name.into(), sha256: sha256_hex(contents.as_bytes()) });
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    pub fn finish<C: Serialize>(self, command: &str, config: &C, seeds: Vec<u64>, inputs: Vec<FileDigest>) -> Result<Manifest> {
        let config = serde_json::to_value(config)?;
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: sha256_hex(serde_json::to_string(&config)?.as_bytes()),
            config,
            seeds,
            inputs,
            outputs: self.outputs,
        };
        std::fs::write(self.dir.join("manifest.json"), to_json(&manifest)?)?;
        Ok(manifest)
    }
}

//! Per-stage manifests: what went in, what came out, and the settings used.
//! No timestamps, so a re-run with the same inputs writes the same bytes.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub tool_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub configuration: Option<String>,
    pub seed: u64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Resolved experiment configuration in TOML form.
    pub config: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path, label: String) -> Result<FileDigest> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(FileDigest {
        path: label,
        sha256: sha256_hex(&bytes),
        bytes: bytes.len() as u64,
    })
}

/// Collects a stage's files and writes its manifest next to its outputs.
pub struct ManifestBuilder {
    root: PathBuf,
    dir: PathBuf,
    manifest: Manifest,
}

impl ManifestBuilder {
    /// `root` is the output directory; inputs under it are recorded relative
    /// to it, so manifests do not depend on where the run was written.
    pub fn new(
        root: &Path,
        dir: &Path,
        stage: &str,
        configuration: Option<String>,
        seed: u64,
        config: String,
    ) -> Self {
        Self {
            root: root.to_path_buf(),
            dir: dir.to_path_buf(),
            manifest: Manifest {
                stage: stage.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                configuration,
                seed,
                inputs: Vec::new(),
                outputs: Vec::new(),
                config,
            },
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let label = path.strip_prefix(&self.root).unwrap_or(path);
        let d = digest_file(path, label.display().to_string())?;
        self.manifest.inputs.push(d);
        Ok(())
    }

    /// Records an output written inside the stage directory.
    pub fn output(&mut self, name: &str) -> Result<()> {
        let d = digest_file(&self.dir.join(name), name.to_string())?;
        self.manifest.outputs.push(d);
        Ok(())
    }

    pub fn write(self) -> Result<Manifest> {
        let path = self.dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        Ok(self.manifest)
    }
}

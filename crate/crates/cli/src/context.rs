use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "run-manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

/// Tracks everything a command reads and produces so the run manifest can
/// list digests.
#[derive(Debug, Default)]
pub struct RunContext {
    inputs: BTreeMap<String, String>,
    files: Vec<(PathBuf, Vec<u8>)>,
    pub stdout: String,
    pub notes: Vec<String>,
    /// Number of problems found; any nonzero count exits with status 1.
    pub findings: usize,
}

impl RunContext {
    pub fn read(&mut self, path: &Path) -> Result<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(bytes)
    }

    pub fn read_text(&mut self, path: &Path) -> Result<String> {
        let bytes = self.read(path)?;
        String::from_utf8(bytes).map_err(|_| CliError::io(path, "not valid UTF-8"))
    }

    /// Sorted non-hidden `*.json` files when `path` is a directory, else the path.
    pub fn expand(&self, path: &Path) -> Result<Vec<PathBuf>> {
        if !path.is_dir() {
            return Ok(vec![path.to_path_buf()]);
        }
        let mut out: Vec<PathBuf> = std::fs::read_dir(path)
            .map_err(|e| CliError::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json" || x == "jsonl")
                    && !p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with('.'))
            })
            .collect();
        out.sort();
        Ok(out)
    }

    pub fn write(&mut self, path: PathBuf, bytes: impl Into<Vec<u8>>) {
        self.files.push((path, bytes.into()));
    }

    pub fn out(&mut self, line: impl AsRef<str>) {
        self.stdout.push_str(line.as_ref());
        self.stdout.push('\n');
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.notes.push(line.into());
    }

    /// Writes pending files and returns the manifest.
    pub fn finish(self, command: &str, seed: Option<u64>, config: serde_json::Value) -> Result<(RunManifest, String, Vec<String>)> {
        let mut outputs = BTreeMap::new();
        for (path, bytes) in &self.files {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            }
            std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
            outputs.insert(path.display().to_string(), sha256_hex(bytes));
        }
        if !self.stdout.is_empty() {
            outputs.insert("<stdout>".into(), sha256_hex(self.stdout.as_bytes()));
        }
        let manifest = RunManifest {
            command: command.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config,
            inputs: self.inputs,
            outputs,
        };
        Ok((manifest, self.stdout, self.notes))
    }
}

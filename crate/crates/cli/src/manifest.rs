//! Run manifest: resolved options, emitted artifacts with checksums, timing.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub options: Vec<(String, String)>,
    pub artifacts: Vec<(String, String)>,
    pub wall_ms: u128,
}

impl Manifest {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            seed,
            options: Vec::new(),
            artifacts: Vec::new(),
            wall_ms: 0,
        }
    }

    pub fn option(&mut self, key: &str, value: impl ToString) {
        self.options.push((key.to_string(), value.to_string()));
    }

    /// Write an artifact, record its checksum, and verify the bytes on disk.
    pub fn write_artifact(&mut self, dir: &Path, name: &str, content: &str) -> sparsehaz::Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, content)?;
        let digest = sha256_hex(content.as_bytes());
        let readback = std::fs::read(&path)?;
        if sha256_hex(&readback) != digest {
            return Err(sparsehaz::Error::Validation(format!(
                "artifact {name} failed checksum validation after writing"
            )));
        }
        self.artifacts.push((name.to_string(), digest));
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        writeln!(out, "sparsehaz-manifest v1").unwrap();
        writeln!(out, "command = {}", self.command).unwrap();
        writeln!(out, "seed = {}", self.seed).unwrap();
        let mut options = self.options.clone();
        options.sort();
        for (k, v) in &options {
            writeln!(out, "option {k} = {v}").unwrap();
        }
        for (name, digest) in &self.artifacts {
            writeln!(out, "artifact {name} sha256={digest}").unwrap();
        }
        writeln!(out, "wall_time_ms = {}", self.wall_ms).unwrap();
        out
    }
}

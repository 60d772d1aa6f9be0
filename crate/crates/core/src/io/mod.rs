//! Configuration, output files and the run manifest.

pub mod config;
pub mod run;
pub mod svg;
pub mod tables;

use std::path::Path;
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Full-precision CSV float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Version tag recorded in every manifest.
pub fn version() -> String {
    format!("v{}", env!("CARGO_PKG_VERSION"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Files produced by one run, kept in memory until [`Outputs::write`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.to_string(), bytes.into()));
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        self.add(name, text);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file into `dir`, then `manifest.json` listing them.
    pub fn write(&self, dir: &Path, config: serde_json::Value, seed: u64, wall: Duration) -> Result<Manifest> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        let manifest = Manifest {
            version: version(),
            seed,
            wall_time_s: wall.as_secs_f64(),
            config,
            files: self
                .files
                .iter()
                .map(|(name, bytes)| FileEntry { name: name.clone(), bytes: bytes.len(), sha256: sha256_hex(bytes) })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        text.push('\n');
        std::fs::write(dir.join(MANIFEST), text)?;
        Ok(manifest)
    }
}

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub wall_time_s: f64,
    /// The fully resolved configuration.
    pub config: serde_json::Value,
    pub files: Vec<FileEntry>,
}

/// Machine-readable form of a failed run.
pub fn error_json(e: &Error) -> serde_json::Value {
    let message = match e {
        Error::Domain(m)
        | Error::Usage(m)
        | Error::Numerical(m)
        | Error::Statistical(m)
        | Error::Config(m)
        | Error::Io(m) => m.clone(),
    };
    serde_json::json!({
        "error": { "kind": e.kind(), "message": message, "exit_code": e.exit_code() }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_matches_a_known_digest() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn manifest_lists_every_file_with_its_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::new();
        out.add("a.csv", "x\n1\n");
        out.add_json("b.json", &serde_json::json!({"k": 1})).unwrap();
        let m = out.write(dir.path(), serde_json::json!({}), 3, Duration::from_millis(5)).unwrap();
        assert_eq!(m.files.len(), 2);
        for f in &m.files {
            let bytes = std::fs::read(dir.path().join(&f.name)).unwrap();
            assert_eq!(sha256_hex(&bytes), f.sha256);
        }
        let text = std::fs::read_to_string(dir.path().join(MANIFEST)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["seed"], 3);
        assert_eq!(v["files"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn errors_carry_kind_and_exit_code() {
        let v = error_json(&Error::Statistical("empty".into()));
        assert_eq!(v["error"]["kind"], "statistical");
        assert_eq!(v["error"]["exit_code"], 4);
        assert_eq!(v["error"]["message"], "empty");
    }
}

//! Atomic artifact writes and the per-run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Manifest file name for `command`; commands sharing a directory keep separate manifests.
pub fn manifest_file(command: &str) -> String {
    format!("manifest-{command}.json")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Record of one command invocation: the effective configuration, its hash,
/// and a checksum of every artifact written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    /// Unix time, s.
    pub started_at: f64,
    pub finished_at: f64,
    /// File name (relative to the output directory) to SHA-256.
    pub outputs: BTreeMap<String, String>,
}

/// Collects artifacts while a command runs and writes the manifest last.
#[derive(Debug)]
pub struct RunRecorder {
    out_dir: PathBuf,
    manifest: RunManifest,
}

impl RunRecorder {
    pub fn start(out_dir: &Path, command: &str, config: serde_json::Value, config_hash: String) -> Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash,
                config,
                started_at: unix_now(),
                finished_at: 0.0,
                outputs: BTreeMap::new(),
            },
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Atomically writes an artifact and records its checksum.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        write_atomic(&path, bytes)?;
        self.manifest.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write(name, &to_json_bytes(value)?)
    }

    /// Records an artifact that already exists on disk (a reused cache entry).
    pub fn adopt(&mut self, name: &str) -> Result<()> {
        let bytes = std::fs::read(self.path(name))?;
        self.manifest.outputs.insert(name.to_string(), sha256_hex(&bytes));
        Ok(())
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        self.manifest.finished_at = unix_now();
        write_atomic(&self.out_dir.join(manifest_file(&self.manifest.command)), &to_json_bytes(&self.manifest)?)?;
        Ok(self.manifest)
    }
}

/// Recomputes every checksum listed in a manifest; returns the mismatching files.
pub fn verify_outputs(out_dir: &Path, manifest: &RunManifest) -> Result<Vec<String>> {
    let mut bad = Vec::new();
    for (name, sum) in &manifest.outputs {
        let bytes = std::fs::read(out_dir.join(name))?;
        if &sha256_hex(&bytes) != sum {
            bad.push(name.clone());
        }
    }
    Ok(bad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn atomic_write_replaces_content() {
        let d = tempfile::tempdir().unwrap();
        let p = d.path().join("sub").join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn manifest_lists_checksums() {
        let d = tempfile::tempdir().unwrap();
        let mut r = RunRecorder::start(d.path(), "test", serde_json::json!({"a": 1}), "h".into()).unwrap();
        r.write("x.csv", b"a,b\n1,2\n").unwrap();
        let m = r.finish().unwrap();
        assert_eq!(m.outputs["x.csv"], sha256_hex(b"a,b\n1,2\n"));
        let on_disk: RunManifest = serde_json::from_slice(&std::fs::read(d.path().join(manifest_file("test"))).unwrap()).unwrap();
        assert_eq!(on_disk, m);
        assert!(verify_outputs(d.path(), &m).unwrap().is_empty());
        std::fs::write(d.path().join("x.csv"), b"tampered").unwrap();
        assert_eq!(verify_outputs(d.path(), &m).unwrap(), vec!["x.csv".to_string()]);
    }
}

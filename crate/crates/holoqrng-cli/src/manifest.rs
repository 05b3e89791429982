//! Run manifest: one JSON line per command invocation recording the tool
//! version, the seed, a snapshot of the effective configuration, the
//! command's parameters, and the SHA-256 of every file it produced. The
//! entries carry no timestamps, so identical inputs append identical lines —
//! re-running a manifest reproduces its hashes exactly.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// One produced file and its content hash.
#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
}

/// One manifest line.
#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
    pub params: serde_json::Value,
    pub outputs: Vec<OutputRecord>,
}

impl ManifestEntry {
    pub fn new(command: &'static str, params: serde_json::Value) -> Self {
        ManifestEntry {
            tool: "holoqrng",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed: None,
            config: None,
            params,
            outputs: Vec::new(),
        }
    }
}

/// Lowercase hex of a SHA-256 digest.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Writes a file atomically: the content lands under a temporary name in the
/// destination directory and is renamed over the final path, so an
/// interrupted run never leaves a partial file where consumers look.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => PathBuf::from(p),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&parent)
        .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.flush().map_err(io_err)?;
    tmp.persist(path).map_err(|e| CliError::Io(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

/// Writes an output file atomically and returns its manifest record.
pub fn write_output(path: &Path, bytes: &[u8]) -> Result<OutputRecord, CliError> {
    write_atomic(path, bytes)?;
    Ok(OutputRecord { path: path.display().to_string(), sha256: sha256_hex(bytes) })
}

/// Appends one entry to the manifest as a single JSON line.
pub fn append(manifest_path: &Path, entry: &ManifestEntry) -> Result<(), CliError> {
    let mut line = serde_json::to_string(entry)
        .map_err(|e| CliError::Validation(format!("manifest entry: {e}")))?;
    line.push('\n');
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(manifest_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", manifest_path.display())))?;
    file.write_all(line.as_bytes())
        .map_err(|e| CliError::Io(format!("{}: {e}", manifest_path.display())))?;
    Ok(())
}

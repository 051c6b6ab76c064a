//! Run manifest: hashes of the effective configuration and every artifact.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub kind: String,
    pub label: String,
    pub config_sha256: String,
    pub heco_core_version: &'static str,
    pub heco_cli_version: &'static str,
    pub seed: u64,
    pub threads: usize,
    pub wall_time_s: f64,
    pub artifacts: Vec<Artifact>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn artifacts(root: &Path, files: &[PathBuf]) -> std::io::Result<Vec<Artifact>> {
    files
        .iter()
        .map(|f| {
            let data = std::fs::read(f)?;
            let rel = f.strip_prefix(root).unwrap_or(f);
            Ok(Artifact {
                path: rel.to_string_lossy().replace('\\', "/"),
                bytes: data.len() as u64,
                sha256: sha256_hex(&data),
            })
        })
        .collect()
}

//! Run manifests, config hashing, and atomic output writing.
//!
//! Outputs are staged in memory and written only after all computation
//! succeeds; each file goes through a temp-then-rename so a failing run
//! never leaves partial outputs. The manifest is written last and records
//! seed, config hash, per-stage wall clock, and the file inventory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use tidgan_core::error::{Error, Result};

/// Hex SHA-256 of the effective configuration's canonical JSON form.
pub fn config_hash<T: Serialize>(effective: &T) -> String {
    let json = serde_json::to_vec(effective).expect("config serializes");
    let digest = Sha256::digest(&json);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Adds the seed and config hash every output JSON must carry.
#[derive(Serialize)]
pub struct Stamped<T: Serialize> {
    pub seed: u64,
    pub config_hash: String,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Serialize)]
struct StageTiming {
    stage: String,
    seconds: f64,
}

#[derive(Serialize)]
struct OutputFile {
    path: String,
    bytes: usize,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    seed: u64,
    config_hash: &'a str,
    artifact_version: &'a str,
    stages: &'a [StageTiming],
    outputs: &'a [OutputFile],
}

/// Collects timings and staged outputs for one command run.
pub struct RunRecorder {
    command: String,
    seed: u64,
    config_hash: String,
    out_dir: PathBuf,
    stages: Vec<StageTiming>,
    current: Option<(String, Instant)>,
    staged: Vec<(PathBuf, Vec<u8>)>,
}

impl RunRecorder {
    pub fn new(command: &str, seed: u64, config_hash: String, out_dir: &Path) -> RunRecorder {
        RunRecorder {
            command: command.to_string(),
            seed,
            config_hash,
            out_dir: out_dir.to_path_buf(),
            stages: Vec::new(),
            current: None,
            staged: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// Starts timing a named stage, closing the previous one.
    pub fn stage(&mut self, name: &str) {
        self.close_stage();
        self.current = Some((name.to_string(), Instant::now()));
    }

    fn close_stage(&mut self) {
        if let Some((name, started)) = self.current.take() {
            self.stages.push(StageTiming {
                stage: name,
                seconds: started.elapsed().as_secs_f64(),
            });
        }
    }

    /// Stages a JSON document (stamped with seed + config hash) for writing.
    pub fn stage_json<T: Serialize>(&mut self, file_name: &str, body: T) -> Result<()> {
        let stamped = Stamped {
            seed: self.seed,
            config_hash: self.config_hash.clone(),
            body,
        };
        let mut bytes = serde_json::to_vec_pretty(&stamped)?;
        bytes.push(b'\n');
        self.staged.push((self.out_dir.join(file_name), bytes));
        Ok(())
    }

    /// Stages raw bytes (CSV and friends) for writing.
    pub fn stage_bytes(&mut self, file_name: &str, bytes: Vec<u8>) {
        self.staged.push((self.out_dir.join(file_name), bytes));
    }

    /// Writes every staged file atomically, then the manifest itself.
    pub fn finish(mut self) -> Result<()> {
        self.close_stage();
        std::fs::create_dir_all(&self.out_dir)?;
        let mut outputs = Vec::new();
        for (path, bytes) in &self.staged {
            write_atomic(path, bytes)?;
            outputs.push(OutputFile {
                path: path
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default(),
                bytes: bytes.len(),
            });
        }
        let manifest = RunManifest {
            command: &self.command,
            seed: self.seed,
            config_hash: &self.config_hash,
            artifact_version: env!("CARGO_PKG_VERSION"),
            stages: &self.stages,
            outputs: &outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        write_atomic(&self.out_dir.join("run_manifest.json"), &bytes)?;
        Ok(())
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Input(format!("bad output path {}", path.display())))?;
    let tmp = path.with_file_name(format!("{}.tmp", file_name.to_string_lossy()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

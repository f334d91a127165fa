use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::failure::{Failure, Outcome};

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Provenance record written next to every run's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_digest: Option<String>,
    pub seed: Option<u64>,
    pub version: String,
    pub started: String,
    pub finished: String,
    pub threads: usize,
    pub outputs: Vec<OutputFile>,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn write_output(dir: &Path, name: &str, bytes: &[u8]) -> Outcome<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Failure::runtime(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| Failure::runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

impl RunManifest {
    pub fn new(command: &str, config_digest: Option<String>, seed: Option<u64>, started: String) -> Self {
        RunManifest {
            command: command.into(),
            config_digest,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            started,
            finished: String::new(),
            threads: rayon::current_num_threads(),
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &Path) -> Outcome<()> {
        let bytes = fs::read(path).map_err(|e| Failure::runtime(format!("cannot read {}: {e}", path.display())))?;
        self.outputs.push(OutputFile {
            path: path.file_name().expect("file").to_string_lossy().into_owned(),
            bytes: bytes.len() as u64,
            sha256: format!("{:x}", Sha256::digest(&bytes)),
        });
        Ok(())
    }

    /// Writes `<stem>.manifest.json` and returns its path.
    pub fn finish(mut self, dir: &Path, stem: &str) -> Outcome<PathBuf> {
        self.finished = now();
        let text = serde_json::to_string_pretty(&self).expect("serializable") + "\n";
        write_output(dir, &format!("{stem}.manifest.json"), text.as_bytes())
    }
}

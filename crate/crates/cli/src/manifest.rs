use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Provenance record written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    /// SHA-256 over the command, the input contents and the settings.
    pub config_hash: String,
    pub version: String,
    pub threads: usize,
    pub wall_time_s: f64,
}

pub struct Recorder {
    command: &'static str,
    inputs: Vec<String>,
    hasher: Sha256,
    threads: usize,
    start: Instant,
}

impl Recorder {
    pub fn new(command: &'static str, threads: usize) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(command.as_bytes());
        Recorder {
            command,
            inputs: Vec::new(),
            hasher,
            threads,
            start: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path, contents: &str) {
        self.inputs.push(path.display().to_string());
        self.hasher.update((contents.len() as u64).to_le_bytes());
        self.hasher.update(contents.as_bytes());
    }

    pub fn setting(&mut self, key: &str, value: impl std::fmt::Display) {
        self.hasher.update(format!("\0{key}={value}").as_bytes());
    }

    pub fn finish(self) -> RunManifest {
        let digest = self.hasher.finalize();
        RunManifest {
            command: self.command.to_string(),
            inputs: self.inputs,
            config_hash: digest.iter().map(|b| format!("{b:02x}")).collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: self.threads,
            wall_time_s: self.start.elapsed().as_secs_f64(),
        }
    }
}

/// `solutions.json` → `solutions.json.manifest.json`.
pub fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

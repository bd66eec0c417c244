use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// What a data-producing command did, and digests of what it wrote.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub version: String,
    pub timings_secs: BTreeMap<String, f64>,
    pub outputs: BTreeMap<String, String>,
}

pub struct Run {
    dir: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl Run {
    pub fn new(command: &str, dir: &Path, seed: Option<u64>) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                command: command.to_string(),
                config: BTreeMap::new(),
                seed,
                version: env!("CARGO_PKG_VERSION").to_string(),
                timings_secs: BTreeMap::new(),
                outputs: BTreeMap::new(),
            },
            started: Instant::now(),
        })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.manifest
            .config
            .insert(key.to_string(), value.to_string());
    }

    pub fn time(&mut self, phase: &str, since: Instant) {
        self.manifest
            .timings_secs
            .insert(phase.to_string(), since.elapsed().as_secs_f64());
    }

    /// Writes a data file and records its digest.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.manifest
            .outputs
            .insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        Ok(path)
    }

    pub fn finish(mut self) -> anyhow::Result<()> {
        self.time("total", self.started);
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest)? + "\n";
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

//! Run provenance written next to every command's outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::io::{sha256_file, write_json};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: u64,
    /// Fully resolved parameters.
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Values chosen during the run, such as a selected `λ₁`.
    pub results: Value,
    pub timings: Vec<Timing>,
}

/// Collects manifest fields while a command runs.
#[derive(Debug)]
pub struct Recorder {
    manifest: RunManifest,
    stage_start: Instant,
}

impl Recorder {
    pub fn new(command: &str, seed: u64, config: Value) -> Self {
        Recorder {
            manifest: RunManifest {
                command: command.to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                seed,
                config,
                inputs: Vec::new(),
                outputs: Vec::new(),
                results: Value::Object(Default::default()),
                timings: Vec::new(),
            },
            stage_start: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path)?;
        self.manifest.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path)?;
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        self.manifest.outputs.push(FileDigest { path: name, sha256 });
        Ok(())
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        if let Value::Object(m) = &mut self.manifest.results {
            m.insert(key.to_string(), serde_json::to_value(value).expect("serializable result"));
        }
    }

    /// Closes the current stage under `name` and starts the next one.
    pub fn stage(&mut self, name: &str) {
        let now = Instant::now();
        self.manifest.timings.push(Timing {
            stage: name.to_string(),
            seconds: now.duration_since(self.stage_start).as_secs_f64(),
        });
        self.stage_start = now;
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    pub fn finish(self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        write_json(&path, &self.manifest)?;
        Ok(path)
    }
}

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;

use crate::error::{CliResult, DataContext};

/// Provenance record written next to a command's primary output.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: Value,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub version: String,
    pub threads: usize,
    pub wall_time_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
    #[serde(skip)]
    started: Option<Instant>,
}

impl Manifest {
    pub fn start(command: &str, config: Value) -> Self {
        Manifest {
            command: command.to_string(),
            config,
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            threads: salience::par::current_threads(),
            wall_time_secs: 0.0,
            summary: None,
            started: Some(Instant::now()),
        }
    }

    pub fn seed(&mut self, name: &str, seed: u64) -> &mut Self {
        self.seeds.insert(name.to_string(), seed);
        self
    }

    pub fn input(&mut self, path: &Path) -> &mut Self {
        self.inputs.push(path.display().to_string());
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.display().to_string());
        self
    }

    /// Stamps the wall time and writes the manifest to `path`.
    pub fn finish(mut self, path: &Path) -> CliResult<()> {
        if let Some(t) = self.started {
            self.wall_time_secs = t.elapsed().as_secs_f64();
        }
        let text = serde_json::to_string_pretty(&self).data("serializing manifest")?;
        std::fs::write(path, text + "\n").data(&format!("writing {}", path.display()))
    }
}

/// `out.json` gets `out.json.manifest.json`.
pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    primary.with_file_name(name)
}

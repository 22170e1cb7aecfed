//! Output files and run manifests.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::Config;
use crate::error::{CliError, CliResult};

/// Output directory of one command.
pub struct OutDir {
    root: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<PathBuf> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("serializable");
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn write_csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> CliResult<PathBuf> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
        for r in rows {
            w.serialize(r).map_err(|e| CliError::io(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.push(name.to_string());
        Ok(path)
    }
}

/// Deterministic part of a manifest: identical for identical inputs.
#[derive(Debug, Serialize)]
pub struct Payload<'a> {
    pub command: &'a str,
    pub version: String,
    pub config: &'a Config,
    pub outputs: Vec<String>,
}

/// Run-dependent metadata kept apart from the payload.
#[derive(Debug, Serialize)]
pub struct Runtime {
    pub workers: usize,
    pub started_unix: u64,
    pub wall_seconds: f64,
    pub host: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub payload: Payload<'a>,
    pub runtime: Runtime,
}

pub fn version() -> String {
    format!("percolab-v{}", env!("CARGO_PKG_VERSION"))
}

pub struct Clock {
    started: Instant,
    started_unix: u64,
}

impl Clock {
    pub fn start() -> Self {
        Self {
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn runtime(&self, workers: usize) -> Runtime {
        Runtime {
            workers,
            started_unix: self.started_unix,
            wall_seconds: self.started.elapsed().as_secs_f64(),
            host: std::env::var("HOSTNAME").unwrap_or_default(),
        }
    }
}

/// Writes `manifest.json` and returns its text.
pub fn write_manifest(
    out: &mut OutDir,
    command: &str,
    config: &Config,
    clock: &Clock,
    workers: usize,
) -> CliResult<String> {
    let manifest = Manifest {
        payload: Payload {
            command,
            version: version(),
            config,
            outputs: out.files().to_vec(),
        },
        runtime: clock.runtime(workers),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("serializable");
    out.write_text("manifest.json", &format!("{text}\n"))?;
    Ok(text)
}

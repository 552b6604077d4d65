//! Output directory handling and the run manifest.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use harnacklab_core::field_io;
use harnacklab_core::ScalarField;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub name: String,
    pub seconds: f64,
}

/// Everything needed to reproduce a run. Timings make it the one
/// non-deterministic file in an output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: u64,
    pub threads: usize,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<String>,
    pub config: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Output {
    dir: PathBuf,
    files: Vec<String>,
    stages: Vec<StageTiming>,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Output {
    pub fn create(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        Ok(Self { dir, files: Vec::new(), stages: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Runs `f` and records its wall-clock time under `name`.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push(StageTiming { name: name.to_owned(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_owned());
        self.dir.join(name)
    }

    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_error(&path, e))
    }

    /// Writes a CSV table; floats use Rust's shortest round-trip formatting.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_error(&path, e))?;
        w.write_record(header).map_err(|e| io_error(&path, e))?;
        for row in rows {
            w.write_record(&row).map_err(|e| io_error(&path, e))?;
        }
        w.flush().map_err(|e| io_error(&path, e))
    }

    pub fn field(&mut self, name: &str, u: &ScalarField) -> Result<(), CliError> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        field_io::write_binary(u, BufWriter::new(file))?;
        Ok(())
    }

    pub fn field_csv(&mut self, name: &str, u: &ScalarField) -> Result<(), CliError> {
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| io_error(&path, e))?;
        field_io::write_csv(u, BufWriter::new(file))?;
        Ok(())
    }

    pub fn finish(self, mut manifest: RunManifest) -> Result<(), CliError> {
        manifest.stages = self.stages;
        manifest.outputs = self.files;
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).map_err(|e| io_error(&path, e))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| io_error(&path, e))
    }
}

/// Formats a float for CSV output.
pub fn num(v: f64) -> String {
    v.to_string()
}

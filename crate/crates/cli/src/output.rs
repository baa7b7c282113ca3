use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub source: String,
    pub spec_sha256: String,
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub inputs: InputRecord,
    pub parameters: Map<String, Value>,
    /// Parameters that fell back to a built-in default.
    pub defaulted: Vec<String>,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<Artifact>,
}

/// Collects artifacts for one run. Without an output directory the primary
/// artifact goes to stdout and nothing touches the filesystem.
pub struct Sink {
    dir: Option<PathBuf>,
    started: Instant,
    outputs: Vec<Artifact>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
        }
        Ok(Sink {
            dir,
            started: Instant::now(),
            outputs: Vec::new(),
        })
    }

    pub fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    /// Writes `name` under the output directory, or prints it when `primary`
    /// and no directory was given.
    pub fn emit(&mut self, name: &str, bytes: &[u8], primary: bool) -> Result<(), CliError> {
        match &self.dir {
            Some(dir) => {
                write_atomic(dir, name, bytes)?;
                self.outputs.push(Artifact {
                    path: name.to_string(),
                    bytes: bytes.len(),
                    sha256: sha256_hex(bytes),
                });
            }
            None if primary => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)
                    .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            }
            None => {}
        }
        Ok(())
    }

    pub fn finish(
        self,
        command: &str,
        inputs: InputRecord,
        parameters: Map<String, Value>,
        defaulted: Vec<String>,
    ) -> Result<(), CliError> {
        let Some(dir) = self.dir else { return Ok(()) };
        let manifest = RunManifest {
            command: command.to_string(),
            version: gelfand::VERSION.to_string(),
            inputs,
            parameters,
            defaulted,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
        };
        let mut text = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        text.push(b'\n');
        write_atomic(&dir, "manifest.json", &text)
    }
}

pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), CliError> {
    let target = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| CliError::io(&target, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(&target, e))?;
    tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
    Ok(())
}

pub fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}

pub fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("report serializes");
    v.push(b'\n');
    v
}

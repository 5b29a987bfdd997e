//! Run directories, CSV writers and the manifest.
//!
//! A run writes into `<out>/<command>-<hash12>/`, where the hash is the
//! SHA-256 of the command name and the resolved config. The same config and
//! seed therefore always land in the same directory with the same bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST: &str = "manifest.json";

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::with_capacity(2 * bytes.len()), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    hash: &'a str,
    config: &'a RunConfig,
    status: &'a str,
    exit_code: i32,
    artifacts: &'a [ArtifactEntry],
}

#[derive(Serialize)]
struct HashInput<'a> {
    command: &'a str,
    config: &'a RunConfig,
}

pub struct RunDir {
    pub dir: PathBuf,
    pub hash: String,
    command: String,
    artifacts: Vec<ArtifactEntry>,
}

impl RunDir {
    pub fn create(out: &Path, command: &str, config: &RunConfig) -> Result<Self, CliError> {
        let input = serde_json::to_vec(&HashInput { command, config })?;
        let hash = sha256_hex(&input);
        let dir = out.join(format!("{command}-{}", &hash[..12]));
        std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.clone(),
            source,
        })?;
        Ok(Self {
            dir,
            hash,
            command: command.to_string(),
            artifacts: Vec::new(),
        })
    }

    pub fn short_hash(&self) -> &str {
        &self.hash[..12]
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })?;
        self.artifacts.push(ArtifactEntry {
            file: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Plain-text report; the first line names the run.
    pub fn write_text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let text = format!("run {}\n\n{body}", self.hash);
        self.write(name, text.as_bytes())
    }

    pub fn write_csv<R>(&mut self, name: &str, header: &[&str], rows: R) -> Result<(), CliError>
    where
        R: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for row in rows {
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
        self.write(name, &bytes)
    }

    /// Writes the manifest last so that it can list every artifact digest.
    pub fn finish(self, config: &RunConfig, status: &str, exit_code: i32) -> Result<PathBuf, CliError> {
        let manifest = Manifest {
            command: &self.command,
            version: env!("CARGO_PKG_VERSION"),
            hash: &self.hash,
            config,
            status,
            exit_code,
            artifacts: &self.artifacts,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })?;
        Ok(self.dir)
    }
}

/// Shortest round-trip formatting.
pub fn num(v: f64) -> String {
    format!("{v}")
}

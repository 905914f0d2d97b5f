//! Run manifests: written before any data file with status "incomplete",
//! rewritten with per-file hashes once every output is on disk.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";
/// Present while a run is in progress; left behind by interrupted runs.
pub const INCOMPLETE_MARKER: &str = "INCOMPLETE";

#[derive(Debug, Clone, Serialize)]
pub struct InputRef {
    /// Path as given on the command line; None for the bundled device file.
    pub path: Option<String>,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRef {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Incomplete,
    Complete,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub status: Status,
    pub parameters: serde_json::Value,
    pub device: Option<InputRef>,
    pub seed: Option<u64>,
    pub outputs: Vec<OutputRef>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory of one run.
pub struct Run {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Run {
    pub fn start(dir: &Path, manifest: RunManifest) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(INCOMPLETE_MARKER), b"")?;
        let run = Self {
            dir: dir.to_path_buf(),
            manifest,
        };
        run.write_manifest()?;
        Ok(run)
    }

    fn write_manifest(&self) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(&self.manifest)?;
        text.push('\n');
        fs::write(self.dir.join(MANIFEST), text)?;
        Ok(())
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.manifest.outputs.push(OutputRef {
            path: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.manifest.status = Status::Complete;
        self.write_manifest()?;
        fs::remove_file(self.dir.join(INCOMPLETE_MARKER))?;
        Ok(())
    }
}

use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Timing {
    pub elapsed_ms: u128,
}

/// Embedded in every report. `timing` stays null unless asked for, so
/// reports of equal runs are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub inputs: Vec<InputFile>,
    pub seed: u64,
    pub version: &'static str,
    pub timing: Option<Timing>,
}

/// Reads a file and remembers its hash for the manifest.
#[derive(Default)]
pub struct Inputs {
    files: Vec<InputFile>,
}

impl Inputs {
    pub fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::Io(path.display().to_string(), e.to_string()))?;
        self.files.push(InputFile { path: path.display().to_string(), sha256: hex::encode(Sha256::digest(&bytes)) });
        String::from_utf8(bytes).map_err(|_| CliError::Parse(path.display().to_string(), "not UTF-8".into()))
    }

    pub fn into_files(self) -> Vec<InputFile> {
        self.files
    }
}

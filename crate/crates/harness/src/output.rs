//! Output files. Everything is rendered in memory first and written only
//! after the whole command has succeeded.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::SCHEMA_VERSION;
use crate::error::HarnessError;

/// Provenance fields carried by every output.
#[derive(Debug, Clone, Serialize)]
pub struct Stamp {
    pub schema_version: u32,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Stamp {
    pub fn new(command: &str, config_sha256: String, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config_sha256,
            seed,
        }
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    #[serde(flatten)]
    stamp: &'a Stamp,
    data: &'a T,
}

/// Pending output files.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn json<T: Serialize>(&mut self, name: &str, stamp: &Stamp, data: &T) -> Result<(), HarnessError> {
        let mut bytes = serde_json::to_vec_pretty(&Envelope { stamp, data }).map_err(|e| HarnessError::Io(e.to_string()))?;
        bytes.push(b'\n');
        self.files.push((name.into(), bytes));
        Ok(())
    }

    /// CSV with a leading `#` comment line holding the stamp.
    pub fn csv<R: Serialize>(&mut self, name: &str, stamp: &Stamp, rows: &[R]) -> Result<(), HarnessError> {
        let mut bytes = format!(
            "# schema_version={} command={} config_sha256={} seed={}\n",
            stamp.schema_version, stamp.command, stamp.config_sha256, stamp.seed
        )
        .into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut bytes);
            for r in rows {
                w.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
            }
            w.flush()?;
        }
        self.files.push((name.into(), bytes));
        Ok(())
    }

    pub fn names(&self) -> Vec<&Path> {
        self.files.iter().map(|f| f.0.as_path()).collect()
    }

    pub fn write_all(self, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

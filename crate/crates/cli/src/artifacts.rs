//! Output directory bookkeeping and the artifact manifest.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Files written for one run, in write order.
pub struct Artifacts {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.written.push((name.to_string(), hex::encode(Sha256::digest(bytes))));
        Ok(())
    }

    /// Writes a CSV table with the given header.
    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Io(format!("cannot encode {name}: {e}"));
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(format!("cannot encode {name}: {e}")))?;
        self.write(name, &bytes)
    }

    pub fn names(&self) -> Vec<String> {
        self.written.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Writes `manifest.csv` listing every artifact with its digest and the config hash.
    pub fn finish(mut self, config_hash: &str) -> Result<Vec<String>, CliError> {
        let rows: Vec<Vec<String>> = self
            .written
            .iter()
            .map(|(n, h)| vec![n.clone(), h.clone(), config_hash.to_string()])
            .collect();
        self.csv("manifest.csv", &["artifact", "sha256", "config_sha256"], &rows)?;
        Ok(self.names())
    }
}

/// Shortest round-trip scientific form, identical on every run.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

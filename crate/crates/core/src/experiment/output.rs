//! CSV tables and the run manifest on disk.

use std::fs;
use std::path::{Path, PathBuf};

use super::runner::RunOutcome;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File name inside the output directory.
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == header.len()));
        Table {
            name: name.into(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows,
        }
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

/// Write all tables and `manifest.json` into `dir`.
///
/// Every file is written to a temporary name first and renamed once all contents are
/// serialized, so a failure leaves no partial table behind.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut staged = Vec::new();
    for t in &outcome.tables {
        staged.push((t.name.clone(), t.to_csv()?));
    }
    let manifest = serde_json::to_vec_pretty(&outcome.manifest).map_err(io)?;
    staged.push(("manifest.json".into(), manifest));
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut tmp = Vec::new();
    for (name, bytes) in &staged {
        let path = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&path, bytes) {
            for p in &tmp {
                let _ = fs::remove_file(p);
            }
            return Err(Error::Io(format!("{}: {e}", path.display())));
        }
        tmp.push(path);
    }
    let mut out = Vec::new();
    for ((name, _), from) in staged.iter().zip(&tmp) {
        let to = dir.join(name);
        fs::rename(from, &to).map_err(|e| Error::Io(format!("{}: {e}", to.display())))?;
        out.push(to);
    }
    Ok(out)
}

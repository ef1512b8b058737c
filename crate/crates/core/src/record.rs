//! Run records: one JSON document per run, every scalar tagged with its inputs.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::bounds::BoundReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedResult {
    pub name: String,
    pub value: f64,
    pub inputs: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub config: serde_json::Value,
    pub results: Vec<NamedResult>,
    pub bounds: Vec<BoundReport>,
    pub notes: Vec<String>,
    /// Seconds since the Unix epoch; honours `SOURCE_DATE_EPOCH` when set.
    pub timestamp: u64,
}

impl RunRecord {
    pub fn new(command: impl Into<String>, config: serde_json::Value) -> Self {
        let timestamp = std::env::var("SOURCE_DATE_EPOCH")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0)
            });
        Self {
            command: command.into(),
            config,
            results: Vec::new(),
            bounds: Vec::new(),
            notes: Vec::new(),
            timestamp,
        }
    }

    pub fn push<I, K>(&mut self, name: impl Into<String>, value: f64, inputs: I)
    where
        I: IntoIterator<Item = (K, serde_json::Value)>,
        K: Into<String>,
    {
        self.results.push(NamedResult {
            name: name.into(),
            value,
            inputs: inputs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        });
    }

    pub fn push_bound(&mut self, report: BoundReport) {
        self.bounds.push(report);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    /// Writes `<dir>/<command>.record.json`, creating `dir` if needed.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(format!("{}.record.json", self.command));
        let body = serde_json::to_string_pretty(self)?;
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&body)?)
    }
}

//! Deterministic report export: CSV tables plus a JSON summary that embeds
//! the result-determining configuration and the machine version.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::LabConfig;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
    Exploratory,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub machine: String,
    pub config: LabConfig,
    pub status: Status,
    pub summary: serde_json::Value,
    #[serde(skip)]
    pub tables: BTreeMap<String, String>,
}

impl Report {
    pub fn new(command: &str, config: &LabConfig) -> Self {
        Self {
            command: command.to_string(),
            machine: config.machine.clone(),
            config: config.clone(),
            status: Status::Pass,
            summary: serde_json::Value::Null,
            tables: BTreeMap::new(),
        }
    }

    pub fn with_summary(mut self, summary: impl Serialize) -> Self {
        self.summary = serde_json::to_value(summary).expect("summary serializes");
        self
    }

    pub fn with_status(mut self, status: Status) -> Self {
        self.status = status;
        self
    }

    pub fn with_table(mut self, name: &str, csv: String) -> Self {
        self.tables.insert(name.to_string(), csv);
        self
    }

    pub fn passed(&self) -> bool {
        self.status != Status::Fail
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Write `<command>.json` and `<command>.<table>.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let summary = dir.join(format!("{}.json", self.command));
        fs::write(&summary, self.summary_json())?;
        written.push(summary);
        for (name, body) in &self.tables {
            let path = dir.join(format!("{}.{name}.csv", self.command));
            fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Render rows as CSV text with the given header.
pub fn csv_text<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator,
    R::Item: AsRef<[u8]>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 csv")
}

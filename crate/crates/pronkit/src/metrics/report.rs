//! Line-delimited evaluation report records.
//!
//! One JSON record per (locale, test set, metric) with a stable field order,
//! so reports diff cleanly across runs.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub locale: String,
    pub test_set: String,
    pub name: String,
    pub value: Option<f64>,
    pub evaluated: usize,
    pub skipped: usize,
}

impl MetricRecord {
    pub fn key(&self) -> (String, String, String) {
        (self.locale.clone(), self.test_set.clone(), self.name.clone())
    }
}

pub fn write_report(path: impl AsRef<Path>, records: &[MetricRecord]) -> io::Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    fs::write(path, out)
}

pub fn read_report(path: impl AsRef<Path>) -> io::Result<Vec<MetricRecord>> {
    let contents = fs::read_to_string(path)?;
    contents
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)))
        .collect()
}

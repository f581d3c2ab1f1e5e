//! Tables, assertions and the run directory layout.

use std::fs;
use std::path::{Path, PathBuf};

use carleman_core::math::LogReal;
use serde::Serialize;

use crate::LabError;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Assertion {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Assertion {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, pass: value <= bound }
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, pass: value >= bound }
    }

    pub fn below(name: &str, value: f64, bound: f64) -> Self {
        Self { name: name.into(), value, bound, pass: value < bound }
    }

    /// Passes when `value` is finite; the bound is `f64::MAX`.
    pub fn finite(name: &str, value: f64) -> Self {
        Self { name: name.into(), value, bound: f64::MAX, pass: value.is_finite() }
    }

    /// A yes/no check reported as value 1 (true) or 0 against bound 1.
    pub fn holds(name: &str, ok: bool) -> Self {
        Self { name: name.into(), value: if ok { 1.0 } else { 0.0 }, bound: 1.0, pass: ok }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub suite: String,
    pub assertions: Vec<Assertion>,
    pub wall_time_s: f64,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.pass)
    }
}

/// A CSV table held in memory; cells are already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, LabError> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| LabError::io(&path, e))?;
        Ok(path)
    }
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn log_num(v: LogReal) -> String {
    v.to_sci_string()
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn flag(b: bool) -> String {
    String::from(if b { "true" } else { "false" })
}

pub fn create_dir(dir: &Path) -> Result<(), LabError> {
    fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), LabError> {
    fs::write(path, text).map_err(|e| LabError::io(path, e))
}

pub fn write_summary(dir: &Path, summary: &Summary) -> Result<(), LabError> {
    let text = serde_json::to_string_pretty(summary)?;
    write_text(&dir.join("summary.json"), &(text + "\n"))
}

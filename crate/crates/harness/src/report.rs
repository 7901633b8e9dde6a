//! Run reports and the on-disk layout of a run directory:
//! `report.json`, one CSV per table, `MANIFEST.json` with SHA-256 hashes of
//! both, and `timing.json` (wall clock; left out of the manifest because it
//! is the one output that differs between identical runs).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::scenario::Scenario;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const FAILURE_MARKER: &str = "FAILED";

/// A pass/fail test of a headline quantity against a documented threshold.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `"<"`, `"<="` or `">="`.
    pub relation: &'static str,
    pub passed: bool,
}

impl Check {
    pub fn below(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: "<", passed: value < threshold }
    }

    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: "<=", passed: value <= threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, relation: ">=", passed: value >= threshold }
    }
}

/// Floors, empty bins and generator gaps reported by the modules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Warnings {
    pub eigenvalue_floors: usize,
    pub empty_bins: usize,
    pub singular_times: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub artifact_version: &'static str,
    pub scenario: Scenario,
    pub headline: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub warnings: Warnings,
    pub results: Value,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Everything a pipeline produces, collected as it goes so that a failing
/// run can still flush its finished tables.
#[derive(Debug, Default)]
pub struct Artifacts {
    pub tables: Vec<(String, Vec<u8>)>,
    pub headline: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub warnings: Warnings,
    pub results: serde_json::Map<String, Value>,
    pub stages: Vec<(String, f64)>,
}

impl Artifacts {
    pub fn table(&mut self, name: &str, bytes: Vec<u8>) {
        self.tables.push((format!("{name}.csv"), bytes));
    }

    /// Rows of a serializable record type as CSV.
    pub fn records<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        self.table(name, w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?);
        Ok(())
    }

    pub fn headline(&mut self, key: &str, value: f64) {
        self.headline.insert(key.into(), value);
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn result<T: Serialize>(&mut self, key: &str, value: &T) -> Result<()> {
        self.results.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn into_report(self, scenario: Scenario) -> (RunReport, Vec<(String, Vec<u8>)>, Vec<(String, f64)>) {
        let report = RunReport {
            artifact_version: ARTIFACT_VERSION,
            scenario,
            headline: self.headline,
            checks: self.checks,
            warnings: self.warnings,
            results: Value::Object(self.results),
        };
        (report, self.tables, self.stages)
    }
}

#[derive(Serialize)]
struct ManifestEntry {
    file: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Timing<'a> {
    wall_clock_seconds: f64,
    stages: BTreeMap<&'a str, f64>,
}

/// Writes `files` into `dir` followed by `MANIFEST.json`; `timing` goes to
/// `timing.json` outside the manifest.
pub fn write_files(dir: &Path, files: &[(String, Vec<u8>)], timing: Option<(f64, &[(String, f64)])>) -> Result<()> {
    fs::create_dir_all(dir)?;
    let stale = dir.join(FAILURE_MARKER);
    if stale.exists() {
        fs::remove_file(stale)?;
    }
    let mut manifest = Vec::with_capacity(files.len());
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
        manifest.push(ManifestEntry { file: name.clone(), bytes: bytes.len(), sha256: hex::encode(Sha256::digest(bytes)) });
    }
    manifest.sort_by(|a, b| a.file.cmp(&b.file));
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    fs::write(dir.join("MANIFEST.json"), text)?;
    if let Some((wall, stages)) = timing {
        let t = Timing { wall_clock_seconds: wall, stages: stages.iter().map(|(k, v)| (k.as_str(), *v)).collect() };
        fs::write(dir.join("timing.json"), serde_json::to_vec_pretty(&t)?)?;
    }
    Ok(())
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

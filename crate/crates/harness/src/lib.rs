//! Scenario runner for the mean-force toolkit: validated JSON scenarios,
//! seeded pipelines over the classical and quantum crates, and run
//! directories with a JSON report, plot-ready CSV tables and a hash manifest.

pub mod error;
pub mod pipeline;
pub mod random;
pub mod report;
pub mod scenario;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub use error::{Error, Result};
pub use report::{Artifacts, Check, RunReport, Warnings, FAILURE_MARKER};
pub use scenario::{builtin, Kind, Scenario, BUILTINS, SCHEMA};

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_VAR: &str = "MEANFORCE_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "meanforce-runs";

pub struct RunOutcome {
    pub report: RunReport,
    /// `report.json` first, then the tables in production order.
    pub files: Vec<(String, Vec<u8>)>,
    pub wall_clock: f64,
    pub stages: Vec<(String, f64)>,
}

/// Runs the scenario in memory. On failure the artifacts finished so far
/// come back with the error.
pub fn run(scenario: &Scenario) -> std::result::Result<RunOutcome, (Error, Artifacts)> {
    let start = Instant::now();
    let mut art = Artifacts::default();
    if let Err(e) = pipeline::execute(scenario, &mut art) {
        return Err((e, art));
    }
    let (report, tables, stages) = art.into_report(scenario.clone());
    let json = match report::json_bytes(&report) {
        Ok(j) => j,
        Err(e) => return Err((e, Artifacts::default())),
    };
    let mut files = vec![("report.json".to_string(), json)];
    files.extend(tables);
    Ok(RunOutcome { report, files, wall_clock: start.elapsed().as_secs_f64(), stages })
}

/// Runs the scenario and writes its directory. A failing run still writes
/// its finished tables plus a `FAILED` marker holding the error.
pub fn run_to_dir(scenario: &Scenario, dir: &Path) -> Result<RunOutcome> {
    match run(scenario) {
        Ok(out) => {
            report::write_files(dir, &out.files, Some((out.wall_clock, &out.stages)))?;
            Ok(out)
        }
        Err((e, art)) => {
            let mut files = vec![("scenario.json".to_string(), report::json_bytes(scenario)?)];
            files.extend(art.tables);
            report::write_files(dir, &files, None)?;
            std::fs::write(dir.join(FAILURE_MARKER), format!("{e}\n"))?;
            Err(e)
        }
    }
}

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

/// A scenario file, or the id of a built-in scenario when no such file exists.
pub fn resolve(config: &str) -> Result<Scenario> {
    let path = Path::new(config);
    if path.exists() {
        return Scenario::load(path);
    }
    builtin(config)
        .map(|b| b.scenario())
        .ok_or_else(|| Error::Validation(format!("no config file or built-in scenario named \"{config}\"")))
}

pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Validation(format!("sweep value \"{s}\" is not a finite number")))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        return Err(Error::Validation("sweep needs at least one value".into()));
    }
    Ok(values)
}

pub struct SweepOutcome {
    pub csv: Vec<u8>,
    pub runs: Vec<RunReport>,
}

/// One run per value of `param` (a dotted path below `params`), each in
/// `dir/run-NN`, and `dir/sweep.csv` with one row of headline scalars per
/// value in the given order. Every value is validated before anything runs.
pub fn sweep(base: &Scenario, param: &str, values: &[f64], dir: &Path) -> Result<SweepOutcome> {
    if values.is_empty() {
        return Err(Error::Validation("sweep needs at least one value".into()));
    }
    let scenarios: Vec<Scenario> = values.iter().map(|&v| base.with_param(param, v)).collect::<Result<_>>()?;
    let mut runs = Vec::with_capacity(scenarios.len());
    for (i, s) in scenarios.iter().enumerate() {
        runs.push(run_to_dir(s, &dir.join(format!("run-{i:02}")))?.report);
    }
    let keys: BTreeSet<&str> = runs.iter().flat_map(|r| r.headline.keys().map(String::as_str)).collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["run".to_string(), param.to_string(), "checks_passed".into(), "checks_total".into()];
    header.extend(keys.iter().map(|k| k.to_string()));
    w.write_record(&header)?;
    for (i, (r, v)) in runs.iter().zip(values).enumerate() {
        let mut row = vec![
            format!("run-{i:02}"),
            v.to_string(),
            r.checks.iter().filter(|c| c.passed).count().to_string(),
            r.checks.len().to_string(),
        ];
        row.extend(keys.iter().map(|k| r.headline.get(*k).map(|x| x.to_string()).unwrap_or_default()));
        w.write_record(&row)?;
    }
    let csv = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    report::write_files(dir, &[("sweep.csv".to_string(), csv.clone())], None)?;
    Ok(SweepOutcome { csv, runs })
}

/// Headline value lookup across a set of reports, keyed by run index.
pub fn headline_column(runs: &[RunReport], key: &str) -> BTreeMap<usize, f64> {
    runs.iter().enumerate().filter_map(|(i, r)| r.headline.get(key).map(|&v| (i, v))).collect()
}

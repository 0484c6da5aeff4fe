use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use super::run::RunRecord;
use super::svg::line_chart;
use super::{HarnessError, RECORD_FILE};

pub const METRICS_CSV_HEADER: [&str; 12] = [
    "config_hash",
    "name",
    "scenario",
    "seed",
    "steps",
    "tagger_auc",
    "final_reality_error",
    "final_percept_bias",
    "conflict_trend",
    "audit_verdict",
    "audit_assertoric",
    "audit_qualitative",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One CSV row in [`METRICS_CSV_HEADER`] order. Missing values are empty.
pub fn report_row(r: &RunRecord) -> Vec<String> {
    let m = &r.metrics;
    let audit = r.audit();
    vec![
        r.config_hash.clone(),
        r.config.name.clone(),
        r.config.scenario().to_string(),
        r.config.seed.to_string(),
        m.steps.to_string(),
        opt(m.tagger_auc),
        opt(m.final_reality_error),
        opt(m.final_percept_bias),
        opt(m.conflict_trend),
        opt(audit.map(|a| a.verdict)),
        opt(audit.map(|a| a.assertoric.pass)),
        opt(audit.map(|a| a.qualitative.pass)),
    ]
}

/// Writes `reality_error.svg`, `conflict.svg` and `tag.svg` into `dir`.
pub fn write_plots(dir: &Path, r: &RunRecord) -> Result<(), HarnessError> {
    let m = &r.metrics;
    let name = &r.config.name;
    let plots = [
        ("reality_error.svg", line_chart(&format!("{name}: reality error"), "step", &[("max |belief - latent|", &m.reality_error)])),
        ("conflict.svg", line_chart(&format!("{name}: percept conflict"), "step", &[("conflict", &m.conflict)])),
        ("tag.svg", line_chart(&format!("{name}: combined tag"), "step", &[("tag", &m.tag)])),
    ];
    for (file, svg) in plots {
        let path = dir.join(file);
        std::fs::write(&path, svg).map_err(HarnessError::io(&path))?;
    }
    Ok(())
}

fn record_paths(dir: &Path) -> Vec<PathBuf> {
    let mut paths: Vec<PathBuf> = WalkDir::new(dir)
        .sort_by_file_name()
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.file_name() == RECORD_FILE)
        .map(|e| e.into_path())
        .collect();
    paths.sort();
    paths
}

/// Collects every record under `dir` into `dir/metrics.csv` and refreshes
/// the plots next to each record. Returns the CSV path.
pub fn report(dir: &Path) -> Result<PathBuf, HarnessError> {
    let paths = record_paths(dir);
    if paths.is_empty() {
        return Err(HarnessError::EmptyRecords(dir.to_path_buf()));
    }
    let csv_path = dir.join("metrics.csv");
    let mut w = csv::Writer::from_path(&csv_path)
        .map_err(|e| HarnessError::Io { path: csv_path.clone(), source: e.into() })?;
    let csv_err = |e: csv::Error| HarnessError::Io { path: csv_path.clone(), source: e.into() };
    w.write_record(METRICS_CSV_HEADER).map_err(csv_err)?;
    for path in &paths {
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        let record = RunRecord::from_json(&text)?;
        w.write_record(report_row(&record)).map_err(csv_err)?;
        write_plots(path.parent().unwrap_or(dir), &record)?;
    }
    w.flush().map_err(HarnessError::io(&csv_path))?;
    Ok(csv_path)
}

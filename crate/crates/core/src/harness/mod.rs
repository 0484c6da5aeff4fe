//! Experiment harness: TOML run configs, seeded runs, grid sweeps and reports.
//!
//! Every output is a pure function of the config. Records carry no
//! timestamps and floats are written with round-trip precision, so running
//! the same config twice produces byte-identical files.

mod config;
mod report;
mod run;
mod svg;
mod sweep;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{
    build_agent, AgentConfig, AuditSection, BeliefConfig, ChannelConfig, EncoderConfig, HeadConfig,
    MetricsConfig, PredictorKind, PrototypeConfig, RunConfig, TaggerConfig, UtilityConfig, TRAIN_SEED_OFFSET,
};
pub use report::{report, report_row, write_plots, METRICS_CSV_HEADER};
pub use run::{compute_metrics, run, run_and_write, AuditRecord, RunMetrics, RunRecord, RECORD_VERSION};
pub use svg::line_chart;
pub use sweep::{apply_override, parse_grid, sweep, sweep_and_write, GridAxis};

/// Environment variable that overrides the output root.
pub const OUTPUT_ROOT_ENV: &str = "SENTIENCE_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "runs";
pub const RECORD_FILE: &str = "record.json";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("bad grid key {key}: {reason}")]
    BadGridKey { key: String, reason: String },
    #[error("no run records under {0}")]
    EmptyRecords(PathBuf),
    #[error("{module} failed: {message}")]
    ComponentFailure { module: &'static str, message: String },
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// 1 for problems with the user's input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::ConfigInvalid(_) | HarnessError::BadGridKey { .. } | HarnessError::EmptyRecords(_) => 1,
            HarnessError::ComponentFailure { .. } | HarnessError::Io { .. } => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> HarnessError {
        let path = path.into();
        move |source| HarnessError::Io { path, source }
    }
}

/// `SENTIENCE_OUTPUT_ROOT` if set, else `runs`.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_ROOT))
}

//! Named, reproducible experiments. Each run validates its configuration,
//! executes the checks of one experiment and writes CSV tables plus a
//! pretty-printed `report.json` into the output directory.

mod cases;
mod config;
mod report;

use std::path::Path;
use std::time::Instant;

pub use config::{ExperimentConfig, ExperimentId, GridSpec, ScaleWindows};
pub use report::{Check, RunReport, Verdict, SCHEMA_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("cannot write artifacts: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot serialize report: {0}")]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExperimentError::ConfigInvalid(_) => 2,
            _ => 1,
        }
    }
}

/// Runs the configured experiment. Configuration problems are returned as
/// [`ExperimentError::ConfigInvalid`] before anything is written; failures
/// of the numerical modules become failed checks in the report.
pub fn run(config: &ExperimentConfig) -> Result<RunReport, ExperimentError> {
    let resolved = config.resolve()?;
    let start = Instant::now();
    std::fs::create_dir_all(&config.out_dir)?;
    let mut ctx = cases::Context::new(&resolved, &config.out_dir);
    let outcome = cases::dispatch(&mut ctx);
    let cases::Context { checks, metrics, artifacts, timings, .. } = ctx;
    let mut checks = checks;
    if let Err(e) = outcome {
        match e {
            cases::CaseError::Module(msg) => checks.push(Check::fail("module_error", msg)),
            cases::CaseError::Output(e) => return Err(e),
        }
    }
    let mut report = RunReport {
        schema_version: SCHEMA_VERSION,
        experiment: config.experiment,
        config: config.clone(),
        checks,
        metrics,
        artifacts,
        versions: report::versions(),
        timings,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    report.artifacts.push("report.json".into());
    report.write(&config.out_dir.join("report.json"))?;
    Ok(report)
}

/// Reads a configuration from JSON text; malformed input is a configuration error.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ExperimentError> {
    serde_json::from_str(text).map_err(|e| ExperimentError::ConfigInvalid(e.to_string()))
}

/// Reads and parses a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ExperimentError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ExperimentError::ConfigInvalid(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

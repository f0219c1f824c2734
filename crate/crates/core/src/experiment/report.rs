use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, ExperimentError, ExperimentId};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail,
    Skip,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skip => "SKIP",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub verdict: Verdict,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, ok: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), verdict: Verdict::from_bool(ok), detail: detail.into() }
    }

    pub fn fail(name: &str, detail: impl Into<String>) -> Self {
        Self { name: name.into(), verdict: Verdict::Fail, detail: detail.into() }
    }

    pub fn skip(name: &str, detail: impl Into<String>) -> Self {
        Self { name: name.into(), verdict: Verdict::Skip, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub experiment: ExperimentId,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, serde_json::Value>,
    /// File names relative to the output directory.
    pub artifacts: Vec<String>,
    pub versions: BTreeMap<String, String>,
    /// Wall time of each phase in seconds.
    pub timings: BTreeMap<String, f64>,
    pub wall_time_s: f64,
}

impl RunReport {
    /// `PASS` unless some check failed.
    pub fn overall(&self) -> Verdict {
        if self.checks.iter().any(|c| c.verdict == Verdict::Fail) {
            Verdict::Fail
        } else {
            Verdict::Pass
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.overall() {
            Verdict::Fail => 1,
            _ => 0,
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).and_then(|v| v.as_f64())
    }

    pub(crate) fn write(&self, path: &Path) -> Result<(), ExperimentError> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

pub(crate) fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("slitlab".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("report_schema".to_string(), SCHEMA_VERSION.to_string()),
        ("field_format".to_string(), "slitlab-field-v1".to_string()),
    ])
}

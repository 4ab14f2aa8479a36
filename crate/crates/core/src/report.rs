//! Machine-readable run artifacts: the JSON run report and tidy
//! `(period, series, value)` CSV for plotting.
//!
//! Reports carry no timestamps or host details, so the same inputs and
//! seed always serialize to the same bytes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bootstrap::BootstrapSummary;
use crate::cost::CostPath;
use crate::error::{Result, ScormError};
use crate::pipeline::{FitOutcome, InputDigest, Paths, ValidationMetrics};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    pub inputs: Vec<InputDigest>,
    /// Command-line settings that shaped the numbers.
    pub settings: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(seed: Option<u64>, inputs: Vec<InputDigest>, settings: Vec<(String, String)>) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            seed,
            inputs,
            settings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunReport {
    pub provenance: Provenance,
    pub fit: FitOutcome,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metrics: Option<ValidationMetrics>,
    pub paths: Paths,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bootstrap: Option<BootstrapSummary>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn report_from_json(s: &str) -> Result<RunReport> {
    Ok(serde_json::from_str(s)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub period: u32,
    pub series: String,
    pub value: f64,
}

pub fn path_series(name: &str, path: &CostPath) -> Vec<SeriesPoint> {
    path.periods
        .iter()
        .zip(&path.cumulative_cost)
        .map(|(&period, &value)| SeriesPoint {
            period,
            series: name.to_owned(),
            value,
        })
        .collect()
}

/// Long-format series for the observed, supplied and fitted paths and any
/// bootstrap quantile and mean paths.
pub fn report_series(paths: &Paths, bootstrap: Option<&BootstrapSummary>) -> Vec<SeriesPoint> {
    let mut out = Vec::new();
    for (name, p) in [("observed", &paths.observed), ("supplied", &paths.supplied), ("fitted", &paths.fitted)] {
        if let Some(p) = p {
            out.extend(path_series(name, p));
        }
    }
    if let Some(b) = bootstrap {
        out.extend(bootstrap_series(b));
    }
    out
}

pub fn bootstrap_series(b: &BootstrapSummary) -> Vec<SeriesPoint> {
    let mut out = Vec::new();
    for q in &b.quantile_paths {
        out.extend(path_series(&format!("bootstrap_q{}", q.level), &q.path));
    }
    out.extend(path_series("bootstrap_mean", &b.expected_path));
    out
}

pub fn write_series<W: Write>(writer: W, points: &[SeriesPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in points {
        w.serialize(p)?;
    }
    w.flush().map_err(|source| ScormError::Io {
        path: "<series output>".into(),
        source,
    })?;
    Ok(())
}

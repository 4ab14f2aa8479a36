//! Core-level CSV with the steam trap feature schema. Rows are grouped by
//! period into batches; categorical and unknown columns are carried along
//! untouched as text features.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{cell, csv_reader, open, parse_f64, parse_u32, row_err, Columns};
use crate::cost::{BatchObservation, CoreObservation};
use crate::error::{Result, ScormError};
use crate::returns::RegimeLabel;

const ALIASES: &[(&str, &[&str])] = &[
    ("tagNumber", &["tagnumber", "tag", "tagno", "id"]),
    ("period", &["period", "t"]),
    ("batchType", &["batchtype", "m", "label"]),
    ("unit", &["unit"]),
    ("trapType", &["traptype"]),
    ("manufacturer", &["manufacturer"]),
    ("application", &["application"]),
    ("conSize", &["consize", "connectionsize"]),
    ("pressure", &["pressure"]),
    ("wearAndTear", &["wearandtear"]),
    ("age", &["age"]),
    ("capGasketMaterial", &["capgasketmaterial", "capgmat"]),
    ("temperature", &["temperature", "temp"]),
    ("leakRate", &["leakrate"]),
    ("quality", &["quality", "q"]),
    ("observedCost", &["observedcost", "cost"]),
];

/// Columns that become typed fields rather than features.
const TYPED: [&str; 3] = ["period", "quality", "observedCost"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoreSchemaOptions {
    /// Leak rate that maps to quality 0 in the convenience mapping.
    pub leak_rate_max: f64,
    /// Fill missing quality from leak rate.
    pub derive_quality: bool,
}

impl Default for CoreSchemaOptions {
    fn default() -> Self {
        Self {
            leak_rate_max: 35.0,
            derive_quality: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedCores {
    pub cores: Vec<CoreObservation>,
    /// Parallel to `cores`: true where quality came from leak rate.
    pub quality_derived: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoreBatch {
    pub period: u32,
    /// From the batch type column when present and consistent.
    pub label: Option<RegimeLabel>,
    pub cores: Vec<CoreObservation>,
}

pub fn load_cores(path: &Path, opts: &CoreSchemaOptions) -> Result<LoadedCores> {
    read_cores(open(path)?, opts)
}

fn check_flag(rec: &csv::StringRecord, pos: Option<usize>, column: &str) -> Result<()> {
    match cell(rec, pos) {
        None | Some("0") | Some("1") => Ok(()),
        Some(s) => Err(row_err(rec, column, format!("`{s}` is not 0 or 1"))),
    }
}

pub fn read_cores<R: Read>(reader: R, opts: &CoreSchemaOptions) -> Result<LoadedCores> {
    if !(opts.leak_rate_max > 0.0) {
        return Err(ScormError::Config(format!(
            "leak rate maximum must be positive, got {}",
            opts.leak_rate_max
        )));
    }
    let mut rdr = csv_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, ALIASES)?;
    cols.require("tagNumber")?;
    let period_at = cols.require("period")?;
    let quality_at = cols.get("quality");
    let leak_at = cols.get("leakRate");
    let cost_at = cols.get("observedCost");

    let feature_cols: Vec<(usize, String)> = (0..cols.headers.len())
        .filter_map(|pos| match cols.is_known(pos) {
            Some(canon) if TYPED.contains(&canon) => None,
            Some(canon) => Some((pos, canon.to_owned())),
            None => {
                let raw = &cols.headers[pos];
                let key = if raw.trim().is_empty() {
                    format!("column{}", pos + 1)
                } else {
                    raw.trim().to_owned()
                };
                Some((pos, key))
            }
        })
        .collect();

    let mut cores = Vec::new();
    let mut quality_derived = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        if cell(&rec, cols.get("tagNumber")).is_none() {
            return Err(row_err(&rec, "tagNumber", "missing value"));
        }
        let period = parse_u32(&rec, Some(period_at), "period")?
            .ok_or_else(|| row_err(&rec, "period", "missing value"))?;
        if period < 1 {
            return Err(row_err(&rec, "period", "period must be at least 1"));
        }
        check_flag(&rec, cols.get("batchType"), "batchType")?;
        check_flag(&rec, cols.get("wearAndTear"), "wearAndTear")?;
        for numeric in ["age", "temperature"] {
            parse_f64(&rec, cols.get(numeric), numeric)?;
        }
        let leak = parse_f64(&rec, leak_at, "leakRate")?;
        if leak.is_some_and(|l| l < 0.0) {
            return Err(row_err(&rec, "leakRate", "leak rate must be non-negative"));
        }
        let (quality, derived) = match parse_f64(&rec, quality_at, "quality")? {
            Some(q) if (0.0..=1.0).contains(&q) => (q, false),
            Some(q) => return Err(row_err(&rec, "quality", format!("{q} outside [0, 1]"))),
            None => match leak {
                Some(l) if opts.derive_quality => ((1.0 - l / opts.leak_rate_max).max(0.0), true),
                _ => return Err(row_err(&rec, "quality", "missing value and no leak rate to derive it from")),
            },
        };
        let observed_cost = parse_f64(&rec, cost_at, "observedCost")?;
        if observed_cost.is_some_and(|c| c < 0.0) {
            return Err(row_err(&rec, "observedCost", "cost must be non-negative"));
        }
        let features: BTreeMap<String, String> = feature_cols
            .iter()
            .map(|(pos, key)| (key.clone(), rec.get(*pos).unwrap_or("").trim().to_owned()))
            .collect();
        cores.push(CoreObservation {
            batch_id: period,
            quality,
            observed_cost,
            features,
        });
        quality_derived.push(derived);
    }
    Ok(LoadedCores { cores, quality_derived })
}

/// Group cores by period, ascending.
pub fn group_cores(cores: &[CoreObservation]) -> Result<Vec<CoreBatch>> {
    let mut by_period: BTreeMap<u32, Vec<CoreObservation>> = BTreeMap::new();
    for c in cores {
        by_period.entry(c.batch_id).or_default().push(c.clone());
    }
    by_period
        .into_iter()
        .map(|(period, cores)| {
            let mut labels = cores.iter().filter_map(|c| c.features.get("batchType")).filter(|s| !s.is_empty());
            let label = match labels.next() {
                None => None,
                Some(first) => {
                    if labels.any(|l| l != first) {
                        return Err(ScormError::Validation(format!(
                            "period {period}: cores disagree on batch type"
                        )));
                    }
                    RegimeLabel::from_bit(if first == "1" { 1 } else { 0 })
                }
            };
            Ok(CoreBatch { period, label, cores })
        })
        .collect()
}

/// Batch summaries from grouped cores. The label comes from `threshold`
/// when given, else from the batch type column, else normal. Observed cost
/// is the sum over cores when every core has one.
pub fn batches_from_cores(cores: &[CoreObservation], threshold: Option<f64>) -> Result<Vec<BatchObservation>> {
    group_cores(cores)?
        .into_iter()
        .map(|b| {
            let size = b.cores.len() as u32;
            let label = match threshold {
                Some(u) if size as f64 >= u => RegimeLabel::Extreme,
                Some(_) => RegimeLabel::Normal,
                None => b.label.unwrap_or(RegimeLabel::Normal),
            };
            let mean_quality = b.cores.iter().map(|c| c.quality).sum::<f64>() / size as f64;
            let observed_cost = b.cores.iter().map(|c| c.observed_cost).sum::<Option<f64>>();
            Ok(BatchObservation {
                period: b.period,
                size,
                label,
                mean_quality,
                observed_cost,
                predicted_cost: None,
            })
        })
        .collect()
}

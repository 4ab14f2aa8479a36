//! Batch-level CSV: one row per period with size, label, mean quality and
//! optional observed and predicted cost.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use super::{cell, csv_reader, open, parse_f64, parse_u32, row_err, Columns};
use crate::cost::BatchObservation;
use crate::error::{Result, ScormError};
use crate::returns::RegimeLabel;

const ALIASES: &[(&str, &[&str])] = &[
    ("period", &["period", "t"]),
    ("size", &["size", "n", "batchsize"]),
    ("label", &["label", "m", "batchtype", "regime"]),
    ("meanQuality", &["meanquality", "qbar", "barq", "quality", "q"]),
    ("observedCost", &["observedcost", "cbobs", "cobs", "observed"]),
    ("predictedCost", &["predictedcost", "hatcbscorm", "ĉbscorm", "cbscorm", "predicted"]),
];

pub const HEADER: [&str; 6] = ["period", "size", "label", "meanQuality", "observedCost", "predictedCost"];

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedBatches {
    pub batches: Vec<BatchObservation>,
    /// Rows whose label disagrees with the supplied threshold.
    pub warnings: Vec<String>,
}

pub fn load_batches(path: &Path, threshold: Option<f64>) -> Result<LoadedBatches> {
    read_batches(open(path)?, threshold)
}

fn parse_label(rec: &csv::StringRecord, pos: usize) -> Result<RegimeLabel> {
    match cell(rec, Some(pos)) {
        Some("0") | Some("normal") => Ok(RegimeLabel::Normal),
        Some("1") | Some("extreme") => Ok(RegimeLabel::Extreme),
        Some(s) => Err(row_err(rec, "label", format!("`{s}` is not 0 or 1"))),
        None => Err(row_err(rec, "label", "missing value")),
    }
}

pub fn read_batches<R: Read>(reader: R, threshold: Option<f64>) -> Result<LoadedBatches> {
    let mut rdr = csv_reader(reader);
    let cols = Columns::resolve(rdr.headers()?, ALIASES)?;
    let period_at = cols.require("period")?;
    let size_at = cols.require("size")?;
    let label_at = cols.require("label")?;
    let q_at = cols.require("meanQuality")?;
    let obs_at = cols.get("observedCost");
    let pred_at = cols.get("predictedCost");

    let mut seen = HashSet::new();
    let mut batches = Vec::new();
    let mut warnings = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let period = parse_u32(&rec, Some(period_at), "period")?
            .ok_or_else(|| row_err(&rec, "period", "missing value"))?;
        if period < 1 {
            return Err(row_err(&rec, "period", "period must be at least 1"));
        }
        if !seen.insert(period) {
            return Err(ScormError::Validation(format!(
                "line {}: duplicate period {period}",
                super::line_of(&rec)
            )));
        }
        let size = parse_u32(&rec, Some(size_at), "size")?.ok_or_else(|| row_err(&rec, "size", "missing value"))?;
        if size < 1 {
            return Err(row_err(&rec, "size", "batch size must be at least 1"));
        }
        let label = parse_label(&rec, label_at)?;
        let mean_quality = parse_f64(&rec, Some(q_at), "meanQuality")?
            .ok_or_else(|| row_err(&rec, "meanQuality", "missing value"))?;
        if !(0.0..=1.0).contains(&mean_quality) {
            return Err(row_err(&rec, "meanQuality", format!("{mean_quality} outside [0, 1]")));
        }
        let observed_cost = parse_f64(&rec, obs_at, "observedCost")?;
        let predicted_cost = parse_f64(&rec, pred_at, "predictedCost")?;
        for (name, v) in [("observedCost", observed_cost), ("predictedCost", predicted_cost)] {
            if v.is_some_and(|c| c < 0.0) {
                return Err(row_err(&rec, name, "cost must be non-negative"));
            }
        }
        if let Some(u) = threshold {
            let implied = if size as f64 >= u {
                RegimeLabel::Extreme
            } else {
                RegimeLabel::Normal
            };
            if implied != label {
                warnings.push(format!(
                    "period {period}: label {} but size {size} against threshold {u} implies {}",
                    label.bit(),
                    implied.bit()
                ));
            }
        }
        batches.push(BatchObservation {
            period,
            size,
            label,
            mean_quality,
            observed_cost,
            predicted_cost,
        });
    }
    Ok(LoadedBatches { batches, warnings })
}

fn opt(v: Option<f64>) -> String {
    v.map(|c| c.to_string()).unwrap_or_default()
}

/// Canonical batch CSV. Floats use the shortest form that parses back to
/// the same value, so a read after a write is lossless.
pub fn write_batches<W: Write>(writer: W, batches: &[BatchObservation]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(HEADER)?;
    for b in batches {
        w.write_record([
            b.period.to_string(),
            b.size.to_string(),
            b.label.bit().to_string(),
            b.mean_quality.to_string(),
            opt(b.observed_cost),
            opt(b.predicted_cost),
        ])?;
    }
    w.flush().map_err(|source| ScormError::Io {
        path: "<batch output>".into(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(s: &str) -> Result<LoadedBatches> {
        read_batches(s.as_bytes(), None)
    }

    #[test]
    fn table_headers() {
        let b = read("T,N,m,q̄,C_B-Obs.,Ĉ_B-SCoRM\n1,9,0,0.09,2140,2177\n").unwrap();
        assert_eq!(b.batches.len(), 1);
        assert_eq!(b.batches[0].observed_cost, Some(2140.0));
        assert_eq!(b.batches[0].predicted_cost, Some(2177.0));
    }

    #[test]
    fn optional_costs() {
        let b = read("period,size,label,meanQuality\n3,4,0,0.5\n").unwrap();
        assert_eq!(b.batches[0].observed_cost, None);
        let b = read("period,size,label,meanQuality,observedCost\n3,4,0,0.5,\n").unwrap();
        assert_eq!(b.batches[0].observed_cost, None);
    }

    #[test]
    fn rejects_bad_rows() {
        let e = read("period,size,label,meanQuality\n1,4,0,0.5\n1,5,0,0.5\n").unwrap_err();
        assert!(matches!(e, ScormError::Validation(_)), "{e}");
        let e = read("period,size,label,meanQuality\n1,4,2,0.5\n").unwrap_err();
        assert!(matches!(e, ScormError::Row { line: 2, .. }), "{e}");
        let e = read("period,size,label,meanQuality\n1,0,0,0.5\n").unwrap_err();
        assert!(matches!(e, ScormError::Row { ref column, .. } if column == "size"));
        let e = read("period,size,label,meanQuality\n1,3,0,1.5\n").unwrap_err();
        assert!(matches!(e, ScormError::Row { ref column, .. } if column == "meanQuality"));
        let e = read("period,label,meanQuality\n1,0,0.5\n").unwrap_err();
        assert!(matches!(e, ScormError::MissingColumn { ref column } if column == "size"));
    }

    #[test]
    fn threshold_mismatch_warns() {
        let b = read_batches("period,size,label,meanQuality\n1,50,0,0.5\n2,5,0,0.5\n".as_bytes(), Some(38.0)).unwrap();
        assert_eq!(b.warnings.len(), 1);
        assert_eq!(b.batches[0].label, RegimeLabel::Normal);
    }

    #[test]
    fn empty_data_section() {
        assert!(read("period,size,label,meanQuality\n").unwrap().batches.is_empty());
    }

    #[test]
    fn write_then_read() {
        let b = read("period,size,label,meanQuality,observedCost\n2,4,1,0.1,\n1,7,0,0.3333333333333333,12.5\n").unwrap();
        let mut buf = Vec::new();
        write_batches(&mut buf, &b.batches).unwrap();
        let again = read_batches(buf.as_slice(), None).unwrap();
        assert_eq!(again.batches, b.batches);
    }
}

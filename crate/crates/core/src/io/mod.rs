//! CSV ingestion and emission plus the bundled case-study fixture.
//!
//! Headers are matched after lower-casing and dropping everything that is
//! not a letter or digit, so `Tag Number`, `tag_number` and `tagNumber` all
//! name the same column.

mod batches;
mod cores;
mod fixture;

pub use batches::{load_batches, read_batches, write_batches, LoadedBatches};
pub use cores::{batches_from_cores, group_cores, load_cores, read_cores, CoreBatch, CoreSchemaOptions, LoadedCores};
pub use fixture::{fixture_batches, FixtureSummary, FIXTURE_CSV, FIXTURE_SUMMARY_JSON};

use std::collections::HashMap;

use crate::error::{Result, ScormError};

pub(crate) fn normalize_header(h: &str) -> String {
    h.chars()
        .filter(|c| c.is_alphanumeric())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Column lookup by canonical name.
pub(crate) struct Columns {
    index: HashMap<&'static str, usize>,
    pub(crate) headers: Vec<String>,
}

impl Columns {
    /// `aliases` maps each canonical name to the normalized spellings it
    /// accepts. Unmatched headers stay available through `headers`.
    pub(crate) fn resolve(headers: &csv::StringRecord, aliases: &[(&'static str, &[&str])]) -> Result<Self> {
        let mut index = HashMap::new();
        for (pos, raw) in headers.iter().enumerate() {
            let norm = normalize_header(raw);
            for (canon, names) in aliases {
                if names.contains(&norm.as_str()) && index.insert(*canon, pos).is_some() {
                    return Err(ScormError::Validation(format!(
                        "header names column `{canon}` more than once"
                    )));
                }
            }
        }
        Ok(Self {
            index,
            headers: headers.iter().map(str::to_owned).collect(),
        })
    }

    pub(crate) fn get(&self, canon: &str) -> Option<usize> {
        self.index.get(canon).copied()
    }

    pub(crate) fn require(&self, canon: &str) -> Result<usize> {
        self.get(canon).ok_or_else(|| ScormError::MissingColumn {
            column: canon.to_owned(),
        })
    }

    pub(crate) fn is_known(&self, pos: usize) -> Option<&'static str> {
        self.index.iter().find(|(_, &p)| p == pos).map(|(k, _)| *k)
    }
}

pub(crate) fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map_or(0, |p| p.line())
}

pub(crate) fn row_err(rec: &csv::StringRecord, column: &str, message: impl Into<String>) -> ScormError {
    ScormError::Row {
        line: line_of(rec),
        column: column.to_owned(),
        message: message.into(),
    }
}

/// Trimmed cell text, `None` when blank.
pub(crate) fn cell(rec: &csv::StringRecord, pos: Option<usize>) -> Option<&str> {
    pos.and_then(|p| rec.get(p)).map(str::trim).filter(|s| !s.is_empty())
}

pub(crate) fn parse_f64(rec: &csv::StringRecord, pos: Option<usize>, column: &str) -> Result<Option<f64>> {
    match cell(rec, pos) {
        None => Ok(None),
        Some(s) => match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(Some(v)),
            _ => Err(row_err(rec, column, format!("`{s}` is not a finite number"))),
        },
    }
}

/// Non-negative integer; accepts `7` and `7.0` but not `7.5`.
pub(crate) fn parse_u32(rec: &csv::StringRecord, pos: Option<usize>, column: &str) -> Result<Option<u32>> {
    match cell(rec, pos) {
        None => Ok(None),
        Some(s) => {
            if let Ok(v) = s.parse::<u32>() {
                return Ok(Some(v));
            }
            match s.parse::<f64>() {
                Ok(v) if v.fract() == 0.0 && (0.0..=u32::MAX as f64).contains(&v) => Ok(Some(v as u32)),
                _ => Err(row_err(rec, column, format!("`{s}` is not a non-negative integer"))),
            }
        }
    }
}

pub(crate) fn csv_reader<R: std::io::Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(r)
}

pub(crate) fn open(path: &std::path::Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|source| ScormError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_spellings() {
        for h in ["Tag Number", "tag_number", "tagNumber", " TAG-NUMBER "] {
            assert_eq!(normalize_header(h), "tagnumber");
        }
        assert_eq!(normalize_header("\\bar{q}"), "barq");
    }
}

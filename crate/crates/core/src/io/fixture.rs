//! The 81-batch steam trap case study, embedded so every command works
//! without an input file, plus a companion summary of its column sums and
//! a reference log-likelihood.

use serde::{Deserialize, Serialize};

use super::batches::{read_batches, LoadedBatches};
use crate::error::Result;
use crate::evt::HpdParams;

pub const FIXTURE_CSV: &str = include_str!("../../fixtures/steam_traps.csv");
pub const FIXTURE_SUMMARY_JSON: &str = include_str!("../../fixtures/steam_traps_summary.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NegLogLikGolden {
    pub params: HpdParams,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FixtureSummary {
    pub rows: usize,
    pub size_sum: u64,
    pub extreme_count: usize,
    pub extreme_periods: Vec<u32>,
    pub mean_quality_sum: f64,
    pub observed_cost_sum: f64,
    pub predicted_cost_sum: f64,
    pub neg_log_lik: NegLogLikGolden,
}

impl FixtureSummary {
    pub fn bundled() -> Result<Self> {
        Ok(serde_json::from_str(FIXTURE_SUMMARY_JSON)?)
    }
}

pub fn fixture_batches() -> Result<LoadedBatches> {
    read_batches(FIXTURE_CSV.as_bytes(), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evt::hpd_neg_log_lik;

    #[test]
    fn summary_matches_table() {
        let b = fixture_batches().unwrap().batches;
        let s = FixtureSummary::bundled().unwrap();
        assert_eq!(b.len(), s.rows);
        assert_eq!(b.iter().map(|x| x.size as u64).sum::<u64>(), s.size_sum);
        let ext: Vec<u32> = b.iter().filter(|x| x.label.is_extreme()).map(|x| x.period).collect();
        assert_eq!(ext, s.extreme_periods);
        assert_eq!(ext.len(), s.extreme_count);
        let obs: f64 = b.iter().filter_map(|x| x.observed_cost).sum();
        let pred: f64 = b.iter().filter_map(|x| x.predicted_cost).sum();
        assert_eq!((obs, pred), (s.observed_cost_sum, s.predicted_cost_sum));
        let q: f64 = b.iter().map(|x| x.mean_quality).sum();
        assert!((q - s.mean_quality_sum).abs() < 1e-9);
    }

    #[test]
    fn nll_golden() {
        let b = fixture_batches().unwrap().batches;
        let sizes: Vec<f64> = b.iter().map(|x| x.size as f64).collect();
        let g = FixtureSummary::bundled().unwrap().neg_log_lik;
        let v = hpd_neg_log_lik(&sizes, &g.params).unwrap();
        assert!((v - g.value).abs() < 1e-9 * g.value, "{v} vs {}", g.value);
    }
}

//! Bootstrap envelopes of cumulative cost paths.
//!
//! Two schemes are provided. The nonparametric one resamples observed
//! batch costs with replacement. The parametric one simulates fresh return
//! streams from the fitted mixture and prices every core with the
//! per-regime cost curve. Replicate `r` draws from stream `r` of a ChaCha8
//! generator keyed by the master seed, so output does not depend on how
//! replicates are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::{batch_cost, cost_path, BatchObservation, CostParams, CostPath};
use crate::error::{Result, ScormError};
use crate::evt::HpdParams;
use crate::returns::{simulate_return_stream_with, QualitySource, ReturnSimConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapMode {
    Nonparametric,
    Parametric,
}

impl std::fmt::Display for BootstrapMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BootstrapMode::Nonparametric => f.write_str("nonparametric"),
            BootstrapMode::Parametric => f.write_str("parametric"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub mode: BootstrapMode,
    pub seed: u64,
    pub quantiles: Vec<f64>,
}

impl BootstrapConfig {
    pub fn new(mode: BootstrapMode, seed: u64) -> Self {
        Self {
            replicates: 3000,
            mode,
            seed,
            quantiles: vec![0.025, 0.5, 0.975],
        }
    }

    pub fn with_replicates(mut self, replicates: usize) -> Self {
        self.replicates = replicates;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(ScormError::Config("at least one bootstrap replicate is required".into()));
        }
        check_quantiles(&self.quantiles)
    }
}

fn check_quantiles(levels: &[f64]) -> Result<()> {
    if levels.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
        return Err(ScormError::Config("quantile levels must lie in (0, 1)".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ScormError::Config("quantile levels must be strictly increasing".into()));
    }
    Ok(())
}

/// Generator for replicate `index` of a run keyed by `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct QuantilePath {
    pub level: f64,
    pub path: CostPath,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BootstrapSummary {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mode: Option<BootstrapMode>,
    pub total_costs: Vec<f64>,
    pub quantile_paths: Vec<QuantilePath>,
    pub best_total: f64,
    pub worst_total: f64,
    pub expected_total: f64,
    pub expected_path: CostPath,
    /// Share of simulated batches in the extreme regime (parametric only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub extreme_batch_fraction: Option<f64>,
}

impl BootstrapSummary {
    /// Standard error of `expected_total` across replicates.
    pub fn standard_error(&self) -> f64 {
        let n = self.total_costs.len() as f64;
        if n < 2.0 {
            return 0.0;
        }
        let var = self
            .total_costs
            .iter()
            .map(|t| (t - self.expected_total).powi(2))
            .sum::<f64>()
            / (n - 1.0);
        (var / n).sqrt()
    }
}

/// Linear interpolation between order statistics of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * level;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Pointwise quantile and mean paths plus the distribution of final totals.
pub fn summarize_paths(paths: &[CostPath], quantiles: &[f64]) -> Result<BootstrapSummary> {
    let first = paths
        .first()
        .ok_or_else(|| ScormError::input("no paths to summarize"))?;
    check_quantiles(quantiles)?;
    for (i, p) in paths.iter().enumerate() {
        if p.periods != first.periods || p.cumulative_cost.len() != p.periods.len() {
            return Err(ScormError::input(format!(
                "path {i} does not share the period axis of path 0"
            )));
        }
    }
    let n = paths.len();
    let len = first.len();
    let mut qcols = vec![Vec::with_capacity(len); quantiles.len()];
    let mut mean_col = Vec::with_capacity(len);
    let mut column = vec![0.0; n];
    for t in 0..len {
        for (slot, p) in column.iter_mut().zip(paths) {
            *slot = p.cumulative_cost[t];
        }
        mean_col.push(column.iter().sum::<f64>() / n as f64);
        column.sort_by(|a, b| a.total_cmp(b));
        for (col, &q) in qcols.iter_mut().zip(quantiles) {
            col.push(quantile_sorted(&column, q));
        }
    }
    let total_costs: Vec<f64> = paths.iter().map(CostPath::total).collect();
    let best_total = total_costs.iter().copied().fold(f64::INFINITY, f64::min);
    let worst_total = total_costs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let expected_total = total_costs.iter().sum::<f64>() / n as f64;
    Ok(BootstrapSummary {
        mode: None,
        total_costs,
        quantile_paths: quantiles
            .iter()
            .zip(qcols)
            .map(|(&level, cumulative_cost)| QuantilePath {
                level,
                path: CostPath {
                    periods: first.periods.clone(),
                    cumulative_cost,
                },
            })
            .collect(),
        // the mean of monotone paths is monotone, but rounding could break
        // equality with the mean of totals; clamp it into place
        best_total,
        worst_total,
        expected_total: expected_total.clamp(best_total, worst_total),
        expected_path: CostPath {
            periods: first.periods.clone(),
            cumulative_cost: mean_col,
        },
        extreme_batch_fraction: None,
    })
}

/// Replicate paths for the nonparametric scheme: batch costs resampled with
/// replacement, laid out on periods `1..=n` in draw order.
pub fn resampled_paths(costs: &[f64], config: &BootstrapConfig) -> Result<Vec<CostPath>> {
    config.validate()?;
    if costs.is_empty() {
        return Err(ScormError::input("bootstrap needs at least one batch"));
    }
    let n = costs.len();
    (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(config.seed, r as u64);
            let draws: Vec<(u32, f64)> = (0..n)
                .map(|i| ((i + 1) as u32, costs[rng.random_range(0..n)]))
                .collect();
            cost_path(&draws)
        })
        .collect()
}

pub fn bootstrap_costs(costs: &[f64], config: &BootstrapConfig) -> Result<BootstrapSummary> {
    let paths = resampled_paths(costs, config)?;
    let mut s = summarize_paths(&paths, &config.quantiles)?;
    s.mode = Some(BootstrapMode::Nonparametric);
    Ok(s)
}

pub fn bootstrap_nonparametric(batches: &[BatchObservation], config: &BootstrapConfig) -> Result<BootstrapSummary> {
    if config.mode != BootstrapMode::Nonparametric {
        return Err(ScormError::Config("bootstrap_nonparametric called with parametric mode".into()));
    }
    let costs = batches
        .iter()
        .map(|b| {
            b.observed_cost
                .ok_or_else(|| ScormError::input(format!("period {}: no observed cost", b.period)))
        })
        .collect::<Result<Vec<f64>>>()?;
    bootstrap_costs(&costs, config)
}

/// Replicate paths for the parametric scheme, with the number of extreme
/// batches drawn across all replicates.
pub fn simulated_paths(
    hpd: &HpdParams,
    cost: &CostParams,
    quality: &QualitySource,
    horizon: usize,
    config: &BootstrapConfig,
) -> Result<(Vec<CostPath>, usize)> {
    config.validate()?;
    cost.validate()?;
    let sim = ReturnSimConfig::new(horizon, *hpd, quality.clone(), config.seed)?;
    let runs = (0..config.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(config.seed, r as u64);
            let stream = simulate_return_stream_with(&sim, &mut rng)?;
            let extreme = stream.iter().filter(|b| b.label.is_extreme()).count();
            let costs = stream
                .iter()
                .map(|b| Ok((b.period, batch_cost(&b.qualities, cost, b.label)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok((cost_path(&costs)?, extreme))
        })
        .collect::<Result<Vec<_>>>()?;
    let extreme = runs.iter().map(|(_, e)| e).sum();
    Ok((runs.into_iter().map(|(p, _)| p).collect(), extreme))
}

/// Simulate `horizon` periods per replicate from the fitted mixture and
/// price every core with its regime's cost curve.
pub fn bootstrap_parametric(
    hpd: &HpdParams,
    cost: &CostParams,
    quality: &QualitySource,
    horizon: usize,
    config: &BootstrapConfig,
) -> Result<BootstrapSummary> {
    if config.mode != BootstrapMode::Parametric {
        return Err(ScormError::Config("bootstrap_parametric called with nonparametric mode".into()));
    }
    let (paths, extreme) = simulated_paths(hpd, cost, quality, horizon, config)?;
    let mut s = summarize_paths(&paths, &config.quantiles)?;
    s.mode = Some(BootstrapMode::Parametric);
    s.extreme_batch_fraction = Some(extreme as f64 / (horizon * config.replicates) as f64);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::returns::RegimeLabel;

    fn constant_path(step: f64, len: u32) -> CostPath {
        cost_path(&(1..=len).map(|p| (p, step)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn single_path_summary() {
        let p = constant_path(3.0, 4);
        let s = summarize_paths(std::slice::from_ref(&p), &[0.1, 0.5, 0.9]).unwrap();
        for q in &s.quantile_paths {
            assert_eq!(q.path, p);
        }
        assert_eq!(s.best_total, 12.0);
        assert_eq!(s.worst_total, 12.0);
    }

    #[test]
    fn two_point_median_is_midpoint() {
        let s = summarize_paths(&[constant_path(0.0, 5), constant_path(10.0, 5)], &[0.5]).unwrap();
        let expect: Vec<f64> = (1..=5).map(|t| 5.0 * t as f64).collect();
        assert_eq!(s.quantile_paths[0].path.cumulative_cost, expect);
    }

    #[test]
    fn mismatched_axes() {
        let a = constant_path(1.0, 3);
        let b = constant_path(1.0, 4);
        assert!(summarize_paths(&[a, b], &[0.5]).is_err());
        assert!(summarize_paths(&[], &[0.5]).is_err());
    }

    #[test]
    fn quantile_validation() {
        let p = constant_path(1.0, 2);
        assert!(summarize_paths(std::slice::from_ref(&p), &[0.5, 0.5]).is_err());
        assert!(summarize_paths(std::slice::from_ref(&p), &[0.0]).is_err());
        let cfg = BootstrapConfig::new(BootstrapMode::Nonparametric, 1).with_replicates(0);
        assert!(bootstrap_costs(&[1.0], &cfg).is_err());
    }

    #[test]
    fn one_batch_one_replicate() {
        let cfg = BootstrapConfig::new(BootstrapMode::Nonparametric, 1).with_replicates(1);
        let s = bootstrap_costs(&[42.0], &cfg).unwrap();
        assert_eq!((s.best_total, s.worst_total, s.expected_total), (42.0, 42.0, 42.0));
    }

    #[test]
    fn identical_costs() {
        let cfg = BootstrapConfig::new(BootstrapMode::Nonparametric, 7).with_replicates(50);
        let s = bootstrap_costs(&[5.0; 12], &cfg).unwrap();
        assert!(s.total_costs.iter().all(|&t| t == 60.0));
        assert!(bootstrap_costs(&[], &cfg).is_err());
    }

    #[test]
    fn missing_cost_rejected() {
        let b = BatchObservation {
            period: 1,
            size: 3,
            label: RegimeLabel::Normal,
            mean_quality: 0.5,
            observed_cost: None,
            predicted_cost: None,
        };
        let cfg = BootstrapConfig::new(BootstrapMode::Nonparametric, 1);
        assert!(bootstrap_nonparametric(&[b], &cfg).is_err());
    }

    #[test]
    fn parametric_zero_cost() {
        let hpd = HpdParams::new(10.0, 5.0, 30.0, 0.2, 10.0, 0.0).unwrap();
        let cost = CostParams::new(500.0, 0.64, 500.0, 0.76).unwrap();
        let q = QualitySource::Empirical {
            normal: vec![1.0],
            extreme: vec![1.0],
        };
        let cfg = BootstrapConfig::new(BootstrapMode::Parametric, 3).with_replicates(20);
        let s = bootstrap_parametric(&hpd, &cost, &q, 12, &cfg).unwrap();
        assert!(s.total_costs.iter().all(|&t| t == 0.0));
        assert_eq!(s.extreme_batch_fraction, Some(0.0));
    }

    #[test]
    fn mode_mismatch() {
        let hpd = HpdParams::new(10.0, 5.0, 30.0, 0.2, 10.0, 0.1).unwrap();
        let cost = CostParams::new(500.0, 0.64, 500.0, 0.76).unwrap();
        let q = QualitySource::Empirical {
            normal: vec![0.5],
            extreme: vec![0.5],
        };
        let cfg = BootstrapConfig::new(BootstrapMode::Nonparametric, 3);
        assert!(bootstrap_parametric(&hpd, &cost, &q, 12, &cfg).is_err());
    }

    #[test]
    fn replicate_streams_differ() {
        let a: u64 = replicate_rng(9, 0).random();
        let b: u64 = replicate_rng(9, 1).random();
        let c: u64 = replicate_rng(9, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}

//! Power-law core cost `c = a0 (1 − q^θ)`, its least-squares calibration,
//! batch and total cost aggregation and cumulative cost paths.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Result, ScormError};
use crate::optim::golden_section;
use crate::returns::RegimeLabel;

/// Search interval for θ.
pub const THETA_MIN: f64 = 1e-4;
pub const THETA_MAX: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostParams {
    pub a0_normal: f64,
    pub theta_normal: f64,
    pub a0_extreme: f64,
    pub theta_extreme: f64,
}

impl CostParams {
    pub fn new(a0_normal: f64, theta_normal: f64, a0_extreme: f64, theta_extreme: f64) -> Result<Self> {
        let p = Self {
            a0_normal,
            theta_normal,
            a0_extreme,
            theta_extreme,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a0) in [("a0Normal", self.a0_normal), ("a0Extreme", self.a0_extreme)] {
            if !(a0 >= 0.0) || !a0.is_finite() {
                return Err(ScormError::param(format!("{name} must be a finite value ≥ 0, got {a0}")));
            }
        }
        for (name, th) in [("thetaNormal", self.theta_normal), ("thetaExtreme", self.theta_extreme)] {
            if !(th > 0.0) || !th.is_finite() {
                return Err(ScormError::param(format!("{name} must be positive, got {th}")));
            }
        }
        Ok(())
    }

    /// (a0, θ) for a regime.
    pub fn for_regime(&self, label: RegimeLabel) -> (f64, f64) {
        match label {
            RegimeLabel::Normal => (self.a0_normal, self.theta_normal),
            RegimeLabel::Extreme => (self.a0_extreme, self.theta_extreme),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CoreObservation {
    pub batch_id: u32,
    pub quality: f64,
    pub observed_cost: Option<f64>,
    /// Remaining input columns with their raw text.
    pub features: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BatchObservation {
    pub period: u32,
    pub size: u32,
    pub label: RegimeLabel,
    pub mean_quality: f64,
    pub observed_cost: Option<f64>,
    pub predicted_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostPath {
    pub periods: Vec<u32>,
    pub cumulative_cost: Vec<f64>,
}

impl CostPath {
    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.cumulative_cost.last().copied().unwrap_or(0.0)
    }
}

fn check_quality(q: f64) -> Result<()> {
    if (0.0..=1.0).contains(&q) {
        Ok(())
    } else {
        Err(ScormError::input(format!("quality {q} outside [0, 1]")))
    }
}

pub fn core_cost(q: f64, a0: f64, theta: f64) -> Result<f64> {
    check_quality(q)?;
    Ok(a0 * (1.0 - q.powf(theta)))
}

fn sse(pairs: &[(f64, f64)], a0: f64, theta: f64) -> f64 {
    pairs
        .iter()
        .map(|&(q, c)| (c - a0 * (1.0 - q.powf(theta))).powi(2))
        .sum()
}

fn usable_pairs(pairs: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    for &(q, c) in pairs {
        check_quality(q)?;
        if !c.is_finite() {
            return Err(ScormError::input("observed cost must be finite"));
        }
    }
    let usable: Vec<(f64, f64)> = pairs.iter().copied().filter(|&(q, _)| q > 0.0 && q < 1.0).collect();
    if usable.is_empty() && !pairs.is_empty() {
        return Err(ScormError::Unidentifiable(
            "every quality is 0 or 1, which carries no information about θ".into(),
        ));
    }
    if usable.len() < 2 {
        return Err(ScormError::InsufficientData(format!(
            "θ needs at least 2 pairs with quality in (0, 1), got {}",
            usable.len()
        )));
    }
    Ok(usable)
}

/// Scan a log-spaced grid then golden-section refine around its best point.
fn minimize_theta<F: Fn(f64) -> f64>(objective: F) -> f64 {
    const GRID: usize = 400;
    let (lo, hi) = (THETA_MIN.ln(), THETA_MAX.ln());
    let grid: Vec<f64> = (0..=GRID)
        .map(|i| (lo + (hi - lo) * i as f64 / GRID as f64).exp())
        .collect();
    let best = (0..grid.len())
        .min_by(|&a, &b| objective(grid[a]).total_cmp(&objective(grid[b])))
        .unwrap_or(0);
    let left = grid[best.saturating_sub(1)];
    let right = grid[(best + 1).min(GRID)];
    golden_section(objective, left, right, 1e-10)
}

/// Least-squares θ for a known a0, using only pairs with quality in (0, 1).
pub fn fit_theta(pairs: &[(f64, f64)], a0: f64) -> Result<f64> {
    if !(a0 > 0.0) || !a0.is_finite() {
        return Err(ScormError::param(format!("a0 must be positive, got {a0}")));
    }
    let usable = usable_pairs(pairs)?;
    Ok(minimize_theta(|t| sse(&usable, a0, t)))
}

/// Joint least-squares fit of (a0, θ). For fixed θ the optimal a0 is
/// linear, so the search profiles it out and stays one-dimensional.
pub fn fit_cost_curve(pairs: &[(f64, f64)]) -> Result<(f64, f64)> {
    usable_pairs(pairs)?;
    let best_a0 = |theta: f64| {
        let (num, den) = pairs.iter().fold((0.0, 0.0), |(n, d), &(q, c)| {
            let g = 1.0 - q.powf(theta);
            (n + c * g, d + g * g)
        });
        if den > 0.0 {
            (num / den).max(0.0)
        } else {
            0.0
        }
    };
    let theta = minimize_theta(|t| sse(pairs, best_a0(t), t));
    Ok((best_a0(theta), theta))
}

/// Σ core cost over the batch's cores with the regime's parameters.
pub fn batch_cost(qualities: &[f64], params: &CostParams, label: RegimeLabel) -> Result<f64> {
    let (a0, theta) = params.for_regime(label);
    qualities.iter().map(|&q| core_cost(q, a0, theta)).sum()
}

/// Batch cost when only the mean quality is known: `size` cores at `q̄`.
/// This is a surrogate; the cost curve is non-linear in q.
pub fn batch_cost_from_mean(size: u32, mean_quality: f64, params: &CostParams, label: RegimeLabel) -> Result<f64> {
    let (a0, theta) = params.for_regime(label);
    Ok(size as f64 * core_cost(mean_quality, a0, theta)?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostSplit {
    pub total: f64,
    pub normal_part: f64,
    pub extreme_part: f64,
}

pub fn total_cost<'a, I>(batches: I, params: &CostParams) -> Result<CostSplit>
where
    I: IntoIterator<Item = (&'a [f64], RegimeLabel)>,
{
    let mut split = CostSplit::default();
    for (qualities, label) in batches {
        let c = batch_cost(qualities, params, label)?;
        match label {
            RegimeLabel::Normal => split.normal_part += c,
            RegimeLabel::Extreme => split.extreme_part += c,
        }
    }
    split.total = split.normal_part + split.extreme_part;
    Ok(split)
}

/// Cumulative cost over periods, sorted by period first.
pub fn cost_path(batch_costs: &[(u32, f64)]) -> Result<CostPath> {
    if let Some(&(p, c)) = batch_costs.iter().find(|(_, c)| !(*c >= 0.0) || !c.is_finite()) {
        return Err(ScormError::input(format!("period {p}: batch cost {c} is negative or not finite")));
    }
    let mut sorted = batch_costs.to_vec();
    sorted.sort_by_key(|&(p, _)| p);
    let mut acc = 0.0;
    let (periods, cumulative_cost) = sorted
        .into_iter()
        .map(|(p, c)| {
            acc += c;
            (p, acc)
        })
        .unzip();
    Ok(CostPath {
        periods,
        cumulative_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use RegimeLabel::*;

    fn params() -> CostParams {
        CostParams::new(500.0, 0.64, 500.0, 0.76).unwrap()
    }

    #[test]
    fn core_cost_values() {
        assert_eq!(core_cost(1.0, 500.0, 0.64).unwrap(), 0.0);
        assert_eq!(core_cost(0.0, 500.0, 0.64).unwrap(), 500.0);
        // 40-digit reference: 179.1435256092739504...
        assert!((core_cost(0.5, 500.0, 0.64).unwrap() - 179.143_525_609_273_95).abs() < 1e-9);
        assert!(core_cost(1.1, 500.0, 0.64).is_err());
        assert!(core_cost(-0.1, 500.0, 0.64).is_err());
    }

    #[test]
    fn theta_recovery() {
        for &truth in &[0.64, 0.76] {
            let pairs: Vec<(f64, f64)> = (1..40)
                .map(|i| {
                    let q = i as f64 / 40.0;
                    (q, 500.0 * (1.0 - q.powf(truth)))
                })
                .collect();
            let t = fit_theta(&pairs, 500.0).unwrap();
            assert!((t - truth).abs() < 1e-6, "{t}");
        }
    }

    #[test]
    fn theta_errors() {
        assert!(matches!(
            fit_theta(&[(1.0, 0.0), (1.0, 0.0), (0.0, 500.0)], 500.0),
            Err(ScormError::Unidentifiable(_))
        ));
        assert!(matches!(
            fit_theta(&[(0.5, 100.0)], 500.0),
            Err(ScormError::InsufficientData(_))
        ));
        assert!(matches!(fit_theta(&[], 500.0), Err(ScormError::InsufficientData(_))));
        assert!(fit_theta(&[(0.5, 1.0), (0.6, 1.0)], 0.0).is_err());
    }

    #[test]
    fn joint_curve_fit() {
        let pairs: Vec<(f64, f64)> = (0..=20)
            .map(|i| {
                let q = i as f64 / 20.0;
                (q, 320.0 * (1.0 - q.powf(1.3)))
            })
            .collect();
        let (a0, t) = fit_cost_curve(&pairs).unwrap();
        assert!((a0 - 320.0).abs() < 1e-5, "{a0}");
        assert!((t - 1.3).abs() < 1e-7, "{t}");
    }

    #[test]
    fn batch_costs() {
        let p = params();
        assert_eq!(batch_cost(&[1.0, 1.0], &p, Normal).unwrap(), 0.0);
        assert_eq!(batch_cost(&[0.0], &p, Normal).unwrap(), 500.0);
        let c = batch_cost(&[0.5; 3], &p, Normal).unwrap();
        assert!((c - 537.430_576_827_821_8).abs() < 1e-9);
        assert_eq!(batch_cost_from_mean(3, 0.5, &p, Normal).unwrap(), c);
        assert!(batch_cost(&[0.5, 2.0], &p, Extreme).is_err());
    }

    #[test]
    fn totals_split_by_regime() {
        let p = params();
        let a = [0.2, 0.4];
        let b = [0.9];
        let s = total_cost([(&a[..], Normal)], &p).unwrap();
        assert_eq!(s.extreme_part, 0.0);
        assert_eq!(s.total, batch_cost(&a, &p, Normal).unwrap());
        let s = total_cost([(&a[..], Normal), (&b[..], Extreme)], &p).unwrap();
        assert_eq!(s.total, s.normal_part + s.extreme_part);
        assert_eq!(s.extreme_part, batch_cost(&b, &p, Extreme).unwrap());
    }

    #[test]
    fn paths() {
        let p = cost_path(&[(1, 100.0)]).unwrap();
        assert_eq!(p.periods, vec![1]);
        assert_eq!(p.cumulative_cost, vec![100.0]);
        let p = cost_path(&[(3, 5.0), (1, 10.0), (2, 0.0)]).unwrap();
        assert_eq!(p.periods, vec![1, 2, 3]);
        assert_eq!(p.cumulative_cost, vec![10.0, 10.0, 15.0]);
        assert!(cost_path(&[(1, -1.0)]).is_err());
        assert!(cost_path(&[]).unwrap().is_empty());
    }
}

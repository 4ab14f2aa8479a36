use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::dist::{hpd_quantile_unchecked, HpdParams};
use crate::error::{Result, ScormError};

/// Smallest expected count allowed in any bin.
pub const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GofBin {
    #[serde(with = "crate::serde_float")]
    pub lower: f64,
    #[serde(with = "crate::serde_float")]
    pub upper: f64,
    pub observed_count: usize,
    pub expected_count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GofResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub bins: Vec<GofBin>,
}

/// Number of equal-probability bins: about 2·n^0.4, limited so every bin
/// expects at least [`MIN_EXPECTED`] points and leaves one degree of freedom.
fn bin_count(n: usize, n_estimated: usize) -> Option<usize> {
    let max_bins = (n as f64 / MIN_EXPECTED).floor() as usize;
    let wanted = ((2.0 * (n as f64).powf(0.4)).ceil() as usize)
        .max(n_estimated + 2)
        .max(3);
    let k = wanted.min(max_bins);
    (k >= 3 && k >= n_estimated + 2).then_some(k)
}

/// Pearson chi-square test of `data` against the mixture `p` over bins of
/// equal model probability.
pub fn chi_square_gof(data: &[f64], p: &HpdParams, n_estimated_params: usize) -> Result<GofResult> {
    if data.len() < 20 {
        return Err(ScormError::InsufficientData(format!(
            "goodness of fit needs at least 20 observations, got {}",
            data.len()
        )));
    }
    p.validate()?;
    let n = data.len();
    let k = bin_count(n, n_estimated_params).ok_or_else(|| {
        ScormError::InsufficientData(format!(
            "{n} observations cannot form 3 bins with expected count {MIN_EXPECTED} and {n_estimated_params} estimated parameters"
        ))
    })?;

    let mut edges = Vec::with_capacity(k + 1);
    edges.push(f64::NEG_INFINITY);
    for i in 1..k {
        edges.push(hpd_quantile_unchecked(i as f64 / k as f64, p));
    }
    edges.push(f64::INFINITY);

    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let expected = n as f64 / k as f64;
    let mut bins = Vec::with_capacity(k);
    let mut statistic = 0.0;
    let mut start = 0;
    for w in edges.windows(2) {
        let end = if w[1] == f64::INFINITY {
            n
        } else {
            sorted.partition_point(|&x| x < w[1])
        };
        let observed = end - start;
        start = end;
        statistic += (observed as f64 - expected).powi(2) / expected;
        bins.push(GofBin {
            lower: w[0],
            upper: w[1],
            observed_count: observed,
            expected_count: expected,
        });
    }
    let df = k - 1 - n_estimated_params;
    let chi = ChiSquared::new(df as f64).map_err(|e| ScormError::Numerical(e.to_string()))?;
    let p_value = chi.sf(statistic).clamp(0.0, 1.0);
    Ok(GofResult {
        statistic,
        degrees_of_freedom: df,
        p_value,
        bins,
    })
}

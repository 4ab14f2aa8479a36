//! Maximum-likelihood fit of the hybrid Pareto mixture with a
//! profile-likelihood search over candidate thresholds.
//!
//! For a fixed threshold `u` the likelihood factorizes into a binomial
//! term for the exceedance count, the truncated-normal body on the points
//! below `u`, and the GPD on the exceedances. The mixture weight is the
//! empirical exceedance fraction; the two components are fitted
//! separately by simplex search and the threshold with the largest total
//! log-likelihood wins (smallest `u` on ties).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dist::{GpdParams, HpdParams};
use crate::error::{Result, ScormError};
use crate::optim::{nelder_mead, NelderMeadConfig};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdSelection {
    /// Profile likelihood over observed values between the configured percentiles.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub threshold: ThresholdSelection,
    pub min_sample: usize,
    pub min_exceedances: usize,
    /// Percentile window (fractions) holding the candidate thresholds.
    pub candidate_window: (f64, f64),
    /// Above this many candidates, a coarse evenly spaced pass is refined
    /// around its best point.
    pub max_coarse_candidates: usize,
    /// Admissible GPD shape range.
    pub xi_bounds: (f64, f64),
    pub optimizer: NelderMeadConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            threshold: ThresholdSelection::Auto,
            min_sample: 20,
            min_exceedances: 5,
            candidate_window: (0.50, 0.95),
            max_coarse_candidates: 64,
            xi_bounds: (-1.0, 1.0),
            optimizer: NelderMeadConfig::default(),
        }
    }
}

impl FitOptions {
    pub fn fixed(u: f64) -> Self {
        Self {
            threshold: ThresholdSelection::Fixed(u),
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ThresholdCandidate {
    pub u: f64,
    #[serde(with = "crate::serde_float")]
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HpdFitReport {
    pub params: HpdParams,
    pub log_likelihood: f64,
    pub n_normal: usize,
    pub n_extreme: usize,
    pub threshold_candidates: Vec<ThresholdCandidate>,
    pub converged: bool,
}

/// Empirical percentile with linear interpolation between order statistics.
pub(crate) fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

fn ln_std_normal_cdf(z: f64) -> f64 {
    (0.5 * statrs::function::erf::erfc(-z / std::f64::consts::SQRT_2)).ln()
}

struct BodyFit {
    mu: f64,
    sigma: f64,
    log_lik: f64,
    converged: bool,
}

fn fit_body(below: &[f64], u: f64, cfg: &NelderMeadConfig) -> BodyFit {
    let n = below.len() as f64;
    let sum: f64 = below.iter().sum();
    let sum_sq: f64 = below.iter().map(|x| x * x).sum();
    let half_ln_2pi = 0.5 * (2.0 * PI).ln();
    // sufficient statistics make each evaluation O(1)
    let nll = |th: &[f64]| {
        let (mu, ls) = (th[0], th[1]);
        let sigma = ls.exp();
        if !sigma.is_finite() || sigma <= 0.0 {
            return f64::INFINITY;
        }
        let ss = sum_sq - 2.0 * mu * sum + n * mu * mu;
        let ln_mass = ln_std_normal_cdf((u - mu) / sigma);
        0.5 * ss / (sigma * sigma) + n * (half_ln_2pi + ls + ln_mass)
    };
    let (mean, sd) = mean_sd(below);
    let sd = sd.max(1e-6);
    let starts = vec![
        vec![mean, sd.ln()],
        vec![mean + sd, (1.5 * sd).ln()],
        vec![mean - 0.5 * sd, (0.75 * sd).ln()],
    ];
    let m = nelder_mead(nll, &starts, cfg);
    BodyFit {
        mu: m.point[0],
        sigma: m.point[1].exp(),
        log_lik: -m.value,
        converged: m.converged,
    }
}

struct TailFit {
    xi: f64,
    beta: f64,
    log_lik: f64,
    converged: bool,
}

/// Probability-weighted-moment estimates of (ξ, β) for exceedances.
pub(crate) fn gpd_pwm(excesses: &[f64]) -> (f64, f64) {
    let mut y = excesses.to_vec();
    y.sort_by(|a, b| a.total_cmp(b));
    let n = y.len() as f64;
    let a0 = y.iter().sum::<f64>() / n;
    let a1 = y
        .iter()
        .enumerate()
        .map(|(i, v)| (1.0 - (i as f64 + 0.65) / n) * v)
        .sum::<f64>()
        / n;
    let denom = a0 - 2.0 * a1;
    if denom.abs() < 1e-12 || a0 <= 0.0 {
        return (0.0, a0.max(1e-6));
    }
    let xi = 2.0 - a0 / denom;
    let beta = 2.0 * a0 * a1 / denom;
    (xi, beta.max(1e-6))
}

fn gpd_nll(excesses: &[f64], xi: f64, beta: f64) -> f64 {
    let g = GpdParams { u: 0.0, xi, beta };
    let mut total = 0.0;
    for &y in excesses {
        let l = g.ln_pdf(y);
        if !l.is_finite() {
            return f64::INFINITY;
        }
        total -= l;
    }
    total
}

fn fit_tail(excesses: &[f64], xi_bounds: (f64, f64), cfg: &NelderMeadConfig) -> TailFit {
    let (lo, hi) = xi_bounds;
    let max_y = excesses.iter().cloned().fold(0.0, f64::max);
    let nll = |th: &[f64]| {
        let (xi, lb) = (th[0], th[1]);
        if xi < lo || xi > hi {
            return f64::INFINITY;
        }
        gpd_nll(excesses, xi, lb.exp())
    };
    let mean = excesses.iter().sum::<f64>() / excesses.len() as f64;
    let (pwm_xi, pwm_beta) = gpd_pwm(excesses);
    let clamp = |xi: f64| xi.clamp(lo + 1e-6, hi - 1e-6);
    let mut starts = vec![vec![clamp(0.0), mean.max(1e-6).ln()]];
    let xi0 = clamp(pwm_xi);
    // keep the start inside the support when ξ < 0
    let beta0 = if xi0 < 0.0 {
        pwm_beta.max(-xi0 * max_y * 1.05)
    } else {
        pwm_beta
    };
    starts.push(vec![xi0, beta0.ln()]);
    starts.push(vec![clamp(0.5), (0.5 * mean).max(1e-6).ln()]);
    let m = nelder_mead(nll, &starts, cfg);
    TailFit {
        xi: m.point[0],
        beta: m.point[1].exp(),
        log_lik: -m.value,
        converged: m.converged,
    }
}

struct CandidateFit {
    params: HpdParams,
    log_lik: f64,
    n_normal: usize,
    n_extreme: usize,
    converged: bool,
}

fn fit_at(sorted: &[f64], u: f64, opts: &FitOptions) -> Option<CandidateFit> {
    let split = sorted.partition_point(|&x| x < u);
    let (below, above) = sorted.split_at(split);
    if above.len() < opts.min_exceedances || below.len() < 2 {
        return None;
    }
    if below[0] == below[below.len() - 1] {
        return None;
    }
    let excesses: Vec<f64> = above.iter().map(|x| x - u).collect();
    if excesses.iter().all(|&y| y == excesses[0]) {
        return None;
    }
    let body = fit_body(below, u, &opts.optimizer);
    let tail = fit_tail(&excesses, opts.xi_bounds, &opts.optimizer);
    let n = sorted.len() as f64;
    let n1 = above.len() as f64;
    let n0 = below.len() as f64;
    let p = n1 / n;
    let log_lik = n0 * (1.0 - p).ln() + n1 * p.ln() + body.log_lik + tail.log_lik;
    if !log_lik.is_finite() {
        return None;
    }
    Some(CandidateFit {
        params: HpdParams {
            mu: body.mu,
            sigma: body.sigma,
            gpd: GpdParams {
                u,
                xi: tail.xi,
                beta: tail.beta,
            },
            p_extreme: p,
        },
        log_lik,
        n_normal: below.len(),
        n_extreme: above.len(),
        converged: body.converged && tail.converged,
    })
}

/// Unique observed values inside the percentile window that leave enough
/// exceedances and a non-degenerate body.
pub fn candidate_thresholds(sorted: &[f64], opts: &FitOptions) -> Vec<f64> {
    let lo = percentile_sorted(sorted, opts.candidate_window.0);
    let hi = percentile_sorted(sorted, opts.candidate_window.1);
    let mut out: Vec<f64> = Vec::new();
    for (i, &v) in sorted.iter().enumerate() {
        if v < lo || v > hi || out.last() == Some(&v) {
            continue;
        }
        if i < 2 || sorted[0] == v {
            continue;
        }
        if sorted.len() - i < opts.min_exceedances {
            break;
        }
        out.push(v);
    }
    out
}

pub fn fit_hpd(data: &[f64], opts: &FitOptions) -> Result<HpdFitReport> {
    if data.len() < opts.min_sample {
        return Err(ScormError::InsufficientData(format!(
            "{} observations, at least {} required",
            data.len(),
            opts.min_sample
        )));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(ScormError::input("sample contains non-finite values"));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));

    let evaluate = |us: &[f64]| -> Vec<(f64, Option<CandidateFit>)> {
        us.par_iter().map(|&u| (u, fit_at(&sorted, u, opts))).collect()
    };

    let mut evaluated: Vec<(f64, Option<CandidateFit>)> = match opts.threshold {
        ThresholdSelection::Fixed(u) => {
            if !u.is_finite() || u <= 0.0 {
                return Err(ScormError::param(format!("threshold must be positive, got {u}")));
            }
            evaluate(&[u])
        }
        ThresholdSelection::Auto => {
            let cands = candidate_thresholds(&sorted, opts);
            if cands.is_empty() {
                return Err(ScormError::TailUnidentifiable(format!(
                    "no candidate threshold leaves {} exceedances",
                    opts.min_exceedances
                )));
            }
            if cands.len() <= opts.max_coarse_candidates.max(3) {
                evaluate(&cands)
            } else {
                coarse_then_refine(&cands, opts.max_coarse_candidates.max(3), evaluate)
            }
        }
    };
    evaluated.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut best: Option<&CandidateFit> = None;
    for (_, fit) in &evaluated {
        if let Some(f) = fit {
            if best.is_none_or(|b| f.log_lik > b.log_lik) {
                best = Some(f);
            }
        }
    }
    let best = best.ok_or_else(|| match opts.threshold {
        ThresholdSelection::Fixed(u) => ScormError::TailUnidentifiable(format!(
            "threshold {u} leaves fewer than {} distinct exceedances or a degenerate body",
            opts.min_exceedances
        )),
        ThresholdSelection::Auto => {
            ScormError::Numerical("no candidate threshold produced a finite likelihood".into())
        }
    })?;

    Ok(HpdFitReport {
        params: best.params,
        log_likelihood: best.log_lik,
        n_normal: best.n_normal,
        n_extreme: best.n_extreme,
        threshold_candidates: evaluated
            .iter()
            .filter_map(|(u, f)| {
                f.as_ref().map(|f| ThresholdCandidate {
                    u: *u,
                    log_likelihood: f.log_lik,
                })
            })
            .collect(),
        converged: best.converged,
    })
}

fn coarse_then_refine<F>(cands: &[f64], coarse: usize, evaluate: F) -> Vec<(f64, Option<CandidateFit>)>
where
    F: Fn(&[f64]) -> Vec<(f64, Option<CandidateFit>)>,
{
    let last = cands.len() - 1;
    let mut idx: Vec<usize> = (0..coarse)
        .map(|k| (k as f64 * last as f64 / (coarse - 1) as f64).round() as usize)
        .collect();
    idx.dedup();
    let us: Vec<f64> = idx.iter().map(|&i| cands[i]).collect();
    let mut out = evaluate(&us);

    let mut best_pos = None;
    let mut best_ll = f64::NEG_INFINITY;
    for (pos, (_, f)) in out.iter().enumerate() {
        if let Some(f) = f {
            if f.log_lik > best_ll {
                best_ll = f.log_lik;
                best_pos = Some(pos);
            }
        }
    }
    if let Some(pos) = best_pos {
        let from = idx[pos.saturating_sub(1)];
        let to = idx[(pos + 1).min(idx.len() - 1)];
        let extra: Vec<f64> = (from..=to)
            .filter(|i| !idx.contains(i))
            .map(|i| cands[i])
            .collect();
        out.extend(evaluate(&extra));
    }
    out
}

//! Truncated normal body, generalized Pareto tail and their weighted
//! hybrid Pareto mixture.
//!
//! ```text
//! f(x) = (1 - p) · φ((x - μ)/σ) / (σ Φ((u - μ)/σ))       x < u
//!      = p · (1/β) (1 + ξ (x - u)/β)^(-1/ξ - 1)           x ≥ u, ξ ≠ 0
//!      = p · (1/β) exp(-(x - u)/β)                         x ≥ u, ξ = 0
//! ```
//!
//! The body is the parent normal N(μ, σ²) restricted to (−∞, u) and
//! renormalized; the tail weight p is the probability of an extreme batch.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Result, ScormError};

/// |ξ| below this uses the exponential branch.
pub const XI_ZERO_TOL: f64 = 1e-8;

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

fn std_normal_cdf(z: f64) -> f64 {
    if z == f64::INFINITY {
        1.0
    } else if z == f64::NEG_INFINITY {
        0.0
    } else {
        0.5 * erfc(-z / SQRT_2)
    }
}

fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Generalized Pareto tail above threshold `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpdParams {
    pub u: f64,
    pub xi: f64,
    pub beta: f64,
}

impl GpdParams {
    pub fn new(u: f64, xi: f64, beta: f64) -> Result<Self> {
        let p = Self { u, xi, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(ScormError::param(format!(
                "GPD scale must be positive, got {}",
                self.beta
            )));
        }
        if !self.u.is_finite() || !self.xi.is_finite() {
            return Err(ScormError::param("GPD threshold and shape must be finite"));
        }
        Ok(())
    }

    /// Right end of the support: `u − β/ξ` for negative shape, else +∞.
    pub fn upper_endpoint(&self) -> f64 {
        if self.xi < -XI_ZERO_TOL {
            self.u - self.beta / self.xi
        } else {
            f64::INFINITY
        }
    }

    fn is_exponential(&self) -> bool {
        self.xi.abs() < XI_ZERO_TOL
    }

    /// Log-density, `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x < self.u {
            return f64::NEG_INFINITY;
        }
        let y = x - self.u;
        if self.is_exponential() {
            return -self.beta.ln() - y / self.beta;
        }
        let t = self.xi * y / self.beta;
        if t < -1.0 {
            return f64::NEG_INFINITY;
        }
        if t == -1.0 {
            // endpoint: finite only for ξ = −1 exactly, where the density is flat
            return if self.xi == -1.0 {
                -self.beta.ln()
            } else if self.xi < -1.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            };
        }
        -self.beta.ln() - (1.0 / self.xi + 1.0) * t.ln_1p()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// P(X ≤ x) for the tail component alone.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.u {
            return 0.0;
        }
        let y = x - self.u;
        if self.is_exponential() {
            return -(-y / self.beta).exp_m1();
        }
        let t = self.xi * y / self.beta;
        if t <= -1.0 {
            return 1.0;
        }
        -((-1.0 / self.xi) * t.ln_1p()).exp_m1()
    }

    pub fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return self.u;
        }
        if q >= 1.0 {
            return self.upper_endpoint();
        }
        let ln_surv = (-q).ln_1p();
        if self.is_exponential() {
            self.u - self.beta * ln_surv
        } else {
            self.u + self.beta * (-self.xi * ln_surv).exp_m1() / self.xi
        }
    }
}

/// Hybrid Pareto mixture: truncated-normal body below `gpd.u`, GPD tail above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HpdParams {
    pub mu: f64,
    pub sigma: f64,
    #[serde(flatten)]
    pub gpd: GpdParams,
    pub p_extreme: f64,
}

impl HpdParams {
    pub fn new(mu: f64, sigma: f64, u: f64, xi: f64, beta: f64, p_extreme: f64) -> Result<Self> {
        let p = Self {
            mu,
            sigma,
            gpd: GpdParams { u, xi, beta },
            p_extreme,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn threshold(&self) -> f64 {
        self.gpd.u
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(ScormError::param(format!(
                "body scale must be positive, got {}",
                self.sigma
            )));
        }
        if !self.mu.is_finite() {
            return Err(ScormError::param("body location must be finite"));
        }
        if !(0.0..=1.0).contains(&self.p_extreme) {
            return Err(ScormError::param(format!(
                "mixture weight must lie in [0, 1], got {}",
                self.p_extreme
            )));
        }
        self.gpd.validate()
    }

    fn body_mass(&self) -> f64 {
        std_normal_cdf((self.gpd.u - self.mu) / self.sigma)
    }

    /// Inverse CDF of the body alone (the truncated normal on (−∞, u)).
    pub fn body_quantile(&self, q: f64) -> f64 {
        let z = std_normal_quantile(q * self.body_mass());
        (self.mu + self.sigma * z).min(self.gpd.u)
    }
}

/// Density of N(μ, σ²) truncated to (−∞, `upper_bound`) and renormalized.
pub fn trunc_normal_pdf(x: f64, mu: f64, sigma: f64, upper_bound: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(ScormError::param(format!(
            "normal scale must be positive, got {sigma}"
        )));
    }
    if x >= upper_bound {
        return Ok(0.0);
    }
    let mass = std_normal_cdf((upper_bound - mu) / sigma);
    if mass <= 0.0 {
        return Err(ScormError::Numerical(
            "truncated normal has no mass below its bound".into(),
        ));
    }
    Ok(std_normal_pdf((x - mu) / sigma) / (sigma * mass))
}

fn trunc_normal_ln_pdf(x: f64, mu: f64, sigma: f64, upper_bound: f64) -> f64 {
    if x >= upper_bound {
        return f64::NEG_INFINITY;
    }
    let z = (x - mu) / sigma;
    let mass = std_normal_cdf((upper_bound - mu) / sigma);
    -0.5 * z * z - 0.5 * (2.0 * PI).ln() - sigma.ln() - mass.ln()
}

pub fn gpd_pdf(x: f64, p: &GpdParams) -> Result<f64> {
    p.validate()?;
    Ok(p.pdf(x))
}

pub fn hpd_pdf(x: f64, p: &HpdParams) -> Result<f64> {
    p.validate()?;
    Ok(hpd_ln_pdf_unchecked(x, p).exp())
}

pub(crate) fn hpd_ln_pdf_unchecked(x: f64, p: &HpdParams) -> f64 {
    if x < p.gpd.u {
        (1.0 - p.p_extreme).ln() + trunc_normal_ln_pdf(x, p.mu, p.sigma, p.gpd.u)
    } else {
        p.p_extreme.ln() + p.gpd.ln_pdf(x)
    }
}

pub fn hpd_cdf(x: f64, p: &HpdParams) -> Result<f64> {
    p.validate()?;
    Ok(hpd_cdf_unchecked(x, p))
}

pub(crate) fn hpd_cdf_unchecked(x: f64, p: &HpdParams) -> f64 {
    if x < p.gpd.u {
        let body = std_normal_cdf((x - p.mu) / p.sigma) / p.body_mass();
        (1.0 - p.p_extreme) * body.min(1.0)
    } else {
        (1.0 - p.p_extreme) + p.p_extreme * p.gpd.cdf(x)
    }
}

/// Inverse CDF of the mixture. Levels below `1 − p` map into the body.
pub fn hpd_quantile(q: f64, p: &HpdParams) -> Result<f64> {
    p.validate()?;
    if !(0.0..=1.0).contains(&q) {
        return Err(ScormError::input(format!("quantile level {q} outside [0, 1]")));
    }
    Ok(hpd_quantile_unchecked(q, p))
}

pub(crate) fn hpd_quantile_unchecked(q: f64, p: &HpdParams) -> f64 {
    let body_weight = 1.0 - p.p_extreme;
    if q < body_weight {
        p.body_quantile(q / body_weight)
    } else if p.p_extreme > 0.0 {
        p.gpd.quantile((q - body_weight) / p.p_extreme)
    } else {
        p.gpd.u
    }
}

/// Draw `count` values by inversion with a generator seeded from `seed`.
pub fn hpd_sample(p: &HpdParams, count: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    hpd_sample_with(p, count, &mut rng)
}

pub fn hpd_sample_with<R: Rng + ?Sized>(p: &HpdParams, count: usize, rng: &mut R) -> Result<Vec<f64>> {
    p.validate()?;
    Ok((0..count)
        .map(|_| hpd_quantile_unchecked(rng.random::<f64>(), p))
        .collect())
}

/// −Σ log f(xᵢ). Returns +∞ when any point has zero density.
pub fn hpd_neg_log_lik(data: &[f64], p: &HpdParams) -> Result<f64> {
    if data.is_empty() {
        return Err(ScormError::input("negative log-likelihood of an empty sample"));
    }
    p.validate()?;
    let mut total = 0.0;
    for &x in data {
        let ll = hpd_ln_pdf_unchecked(x, p);
        if ll == f64::NEG_INFINITY {
            return Ok(f64::INFINITY);
        }
        total -= ll;
    }
    Ok(total)
}

/// Difference between the tail density at `u` and the body density just
/// below it. The mixture is not constrained to be continuous at the threshold.
pub fn density_jump(p: &HpdParams) -> f64 {
    let u = p.gpd.u;
    let below = (1.0 - p.p_extreme) * std_normal_pdf((u - p.mu) / p.sigma) / (p.sigma * p.body_mass());
    let above = p.p_extreme / p.gpd.beta;
    above - below
}

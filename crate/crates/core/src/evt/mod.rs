//! Return-quantity distributions: truncated normal body, generalized
//! Pareto tail, their mixture, maximum-likelihood fitting and Pearson
//! goodness of fit.

mod dist;
mod fit;
mod gof;

pub use dist::{
    density_jump, gpd_pdf, hpd_cdf, hpd_neg_log_lik, hpd_pdf, hpd_quantile, hpd_sample,
    hpd_sample_with, trunc_normal_pdf, GpdParams, HpdParams, XI_ZERO_TOL,
};
pub use fit::{
    candidate_thresholds, fit_hpd, FitOptions, HpdFitReport, ThresholdCandidate,
    ThresholdSelection,
};
pub use gof::{chi_square_gof, GofBin, GofResult, MIN_EXPECTED};

/// Free parameters of a fitted mixture (μ, σ, u, ξ, β, p).
pub const HPD_ESTIMATED_PARAMS: usize = 6;

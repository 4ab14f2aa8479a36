//! The analysis sequence behind the command-line tool: load data, fit the
//! size mixture and the cost curves, validate against observed costs,
//! simulate and bootstrap. Each stage is a plain function so tests can
//! drive it without spawning the binary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bootstrap::{bootstrap_costs, bootstrap_parametric, BootstrapConfig, BootstrapMode, BootstrapSummary};
use crate::cost::{batch_cost, batch_cost_from_mean, cost_path, fit_theta, BatchObservation, CoreObservation, CostParams, CostPath};
use crate::error::{Result, ScormError};
use crate::evt::{chi_square_gof, fit_hpd, FitOptions, GofResult, HpdFitReport, HpdParams, ThresholdSelection, HPD_ESTIMATED_PARAMS};
use crate::io::{self, CoreSchemaOptions};
use crate::metrics::{mse, percent_error, zeror_predict};
use crate::returns::{classify_batches, estimate_p, simulate_return_stream, QualitySource, RegimeLabel, ReturnSimConfig, SimulatedBatch};

pub const FIXTURE_NAME: &str = "bundled:steam_traps.csv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    Fixture,
    Batches(PathBuf),
    Cores(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InputDigest {
    pub name: String,
    pub kind: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub batches: Vec<BatchObservation>,
    /// Present when the input was core-level.
    pub cores: Option<Vec<CoreObservation>>,
    pub input: InputDigest,
    pub warnings: Vec<String>,
}

impl Dataset {
    pub fn sizes(&self) -> Vec<f64> {
        self.batches.iter().map(|b| b.size as f64).collect()
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| ScormError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load batches from the chosen source. A threshold only produces label
/// warnings for batch files; core files carry no size labels of their own
/// until a threshold is fitted.
pub fn load_dataset(source: &DataSource, threshold: Option<f64>) -> Result<Dataset> {
    match source {
        DataSource::Fixture => {
            let loaded = io::read_batches(io::FIXTURE_CSV.as_bytes(), threshold)?;
            Ok(Dataset {
                batches: loaded.batches,
                cores: None,
                input: InputDigest {
                    name: FIXTURE_NAME.into(),
                    kind: "batches".into(),
                    sha256: sha256_hex(io::FIXTURE_CSV.as_bytes()),
                },
                warnings: loaded.warnings,
            })
        }
        DataSource::Batches(path) => {
            let bytes = read_file(path)?;
            let loaded = io::read_batches(bytes.as_slice(), threshold)?;
            Ok(Dataset {
                batches: loaded.batches,
                cores: None,
                input: InputDigest {
                    name: path.display().to_string(),
                    kind: "batches".into(),
                    sha256: sha256_hex(&bytes),
                },
                warnings: loaded.warnings,
            })
        }
        DataSource::Cores(path) => {
            let bytes = read_file(path)?;
            let loaded = io::read_cores(bytes.as_slice(), &CoreSchemaOptions::default())?;
            let derived = loaded.quality_derived.iter().filter(|d| **d).count();
            let mut warnings = Vec::new();
            if derived > 0 {
                warnings.push(format!("{derived} core qualities derived from leak rate"));
            }
            Ok(Dataset {
                batches: io::batches_from_cores(&loaded.cores, None)?,
                cores: Some(loaded.cores),
                input: InputDigest {
                    name: path.display().to_string(),
                    kind: "cores".into(),
                    sha256: sha256_hex(&bytes),
                },
                warnings,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum CostFitSource {
    /// Per-core (quality, cost) pairs.
    Cores,
    /// Each batch contributes `size` copies of (mean quality, cost / size).
    BatchMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CostFit {
    pub params: CostParams,
    pub source: CostFitSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FitOutcome {
    pub hpd: HpdFitReport,
    /// Extreme fraction of the labels implied by the fitted threshold.
    pub p_hat: f64,
    /// Extreme fraction of the labels carried by the data.
    pub p_labels: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cost: Option<CostFit>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gof: Option<GofResult>,
    #[serde(default)]
    pub notes: Vec<String>,
}

/// (quality, cost) pairs indexed by regime bit.
type RegimePairs = [Vec<(f64, f64)>; 2];

/// Per-regime cost pairs for the least-squares θ fit.
fn cost_pairs(data: &Dataset, label_of: impl Fn(u32) -> RegimeLabel) -> Option<(CostFitSource, RegimePairs)> {
    let mut pairs = [Vec::new(), Vec::new()];
    if let Some(cores) = &data.cores {
        for c in cores {
            if let Some(cost) = c.observed_cost {
                pairs[label_of(c.batch_id).bit() as usize].push((c.quality, cost));
            }
        }
        if pairs.iter().any(|p| !p.is_empty()) {
            return Some((CostFitSource::Cores, pairs));
        }
    }
    for b in &data.batches {
        if let Some(cost) = b.observed_cost {
            let per_core = cost / b.size as f64;
            let slot = &mut pairs[label_of(b.period).bit() as usize];
            slot.extend(std::iter::repeat_n((b.mean_quality, per_core), b.size as usize));
        }
    }
    pairs.iter().any(|p| !p.is_empty()).then_some((CostFitSource::BatchMeans, pairs))
}

/// Labels used for cost fitting and simulation pools: the data's own
/// labels for batch files, labels from the fitted threshold for core files.
pub fn working_labels(data: &Dataset, u: f64) -> Vec<RegimeLabel> {
    if data.cores.is_some() {
        classify_batches(&data.sizes(), u)
    } else {
        data.batches.iter().map(|b| b.label).collect()
    }
}

pub fn run_fit(data: &Dataset, threshold: ThresholdSelection, a0: f64) -> Result<FitOutcome> {
    let sizes = data.sizes();
    let opts = FitOptions {
        threshold,
        ..FitOptions::default()
    };
    let hpd = fit_hpd(&sizes, &opts)?;
    let u = hpd.params.threshold();
    let p_hat = estimate_p(&classify_batches(&sizes, u))?;
    let labels = working_labels(data, u);
    let p_labels = estimate_p(&data.batches.iter().map(|b| b.label).collect::<Vec<_>>())?;
    let mut notes = Vec::new();
    if !hpd.converged {
        notes.push("simplex search hit its iteration limit for at least one component".into());
    }

    let label_of = |period: u32| {
        data.batches
            .iter()
            .position(|b| b.period == period)
            .map_or(RegimeLabel::Normal, |i| labels[i])
    };
    let cost = match cost_pairs(data, label_of) {
        None => None,
        Some((source, [normal, extreme])) => {
            let theta_normal = fit_theta(&normal, a0)?;
            let theta_extreme = if extreme.is_empty() {
                notes.push("no extreme batches with costs; extreme θ copied from the normal regime".into());
                theta_normal
            } else {
                fit_theta(&extreme, a0)?
            };
            Some(CostFit {
                params: CostParams::new(a0, theta_normal, a0, theta_extreme)?,
                source,
            })
        }
    };

    let gof = match chi_square_gof(&sizes, &hpd.params, HPD_ESTIMATED_PARAMS) {
        Ok(g) => Some(g),
        Err(e) => {
            notes.push(format!("goodness of fit skipped: {e}"));
            None
        }
    };
    Ok(FitOutcome {
        hpd,
        p_hat,
        p_labels,
        cost,
        gof,
        notes,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelMetrics {
    pub mse: f64,
    pub percent_error: f64,
    pub predicted_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidationMetrics {
    pub batches: usize,
    pub observed_total: f64,
    /// Against the file's predicted-cost column, when it has one.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub supplied: Option<ModelMetrics>,
    /// Against the cost curves fitted here.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fitted: Option<ModelMetrics>,
    pub zeror_prediction: f64,
    pub zeror_mse: f64,
    pub zeror_percent_error: f64,
    pub extreme_core_share: f64,
    pub extreme_cost_share: f64,
}

fn model_metrics(predicted: &[f64], observed: &[f64]) -> Result<ModelMetrics> {
    let predicted_total: f64 = predicted.iter().sum();
    Ok(ModelMetrics {
        mse: mse(predicted, observed)?,
        percent_error: percent_error(predicted_total, observed.iter().sum())?,
        predicted_total,
    })
}

/// Batch costs predicted by the fitted curves. Core-level data is priced
/// per core; batch-level data at the batch mean quality.
pub fn fitted_batch_costs(data: &Dataset, labels: &[RegimeLabel], cost: &CostParams) -> Result<Vec<f64>> {
    data.batches
        .iter()
        .zip(labels)
        .map(|(b, &label)| match &data.cores {
            Some(cores) => {
                let q: Vec<f64> = cores.iter().filter(|c| c.batch_id == b.period).map(|c| c.quality).collect();
                batch_cost(&q, cost, label)
            }
            None => batch_cost_from_mean(b.size, b.mean_quality, cost, label),
        })
        .collect()
}

pub fn observed_costs(data: &Dataset) -> Result<Vec<f64>> {
    data.batches
        .iter()
        .map(|b| {
            b.observed_cost
                .ok_or_else(|| ScormError::Validation(format!("period {}: observed cost missing", b.period)))
        })
        .collect()
}

pub fn run_validate(data: &Dataset, fit: Option<&FitOutcome>) -> Result<ValidationMetrics> {
    let observed = observed_costs(data)?;
    let observed_total: f64 = observed.iter().sum();
    let supplied = match data.batches.iter().map(|b| b.predicted_cost).collect::<Option<Vec<f64>>>() {
        Some(pred) if !pred.is_empty() => Some(model_metrics(&pred, &observed)?),
        _ => None,
    };
    let fitted = match fit.and_then(|f| f.cost.as_ref().map(|c| (f, c))) {
        Some((f, c)) => {
            let labels = working_labels(data, f.hpd.params.threshold());
            Some(model_metrics(&fitted_batch_costs(data, &labels, &c.params)?, &observed)?)
        }
        None => None,
    };
    let zeror = zeror_predict(&observed)?;
    let zeror_pred = vec![zeror; observed.len()];
    let cores: f64 = data.batches.iter().map(|b| b.size as f64).sum();
    let ext = data.batches.iter().zip(&observed).filter(|(b, _)| b.label.is_extreme());
    let (ext_cores, ext_cost) = ext.fold((0.0, 0.0), |(n, c), (b, o)| (n + b.size as f64, c + o));
    Ok(ValidationMetrics {
        batches: observed.len(),
        observed_total,
        supplied,
        fitted,
        zeror_prediction: zeror,
        zeror_mse: mse(&zeror_pred, &observed)?,
        zeror_percent_error: percent_error(zeror * observed.len() as f64, observed_total)?,
        extreme_core_share: ext_cores / cores,
        extreme_cost_share: if observed_total > 0.0 { ext_cost / observed_total } else { 0.0 },
    })
}

/// Empirical quality pools per regime: per-core qualities when available,
/// batch mean qualities otherwise.
pub fn quality_pools(data: &Dataset, labels: &[RegimeLabel]) -> QualitySource {
    let mut pools = [Vec::new(), Vec::new()];
    for (b, l) in data.batches.iter().zip(labels) {
        let slot = &mut pools[l.bit() as usize];
        match &data.cores {
            Some(cores) => slot.extend(cores.iter().filter(|c| c.batch_id == b.period).map(|c| c.quality)),
            None => slot.push(b.mean_quality),
        }
    }
    let [normal, extreme] = pools;
    QualitySource::Empirical { normal, extreme }
}

pub fn run_simulate(data: &Dataset, fit: &FitOutcome, horizon: usize, seed: u64) -> Result<Vec<SimulatedBatch>> {
    let labels = working_labels(data, fit.hpd.params.threshold());
    let cfg = ReturnSimConfig::new(horizon, fit.hpd.params, quality_pools(data, &labels), seed)?;
    simulate_return_stream(&cfg)
}

/// Simulated batches as batch rows, priced with the fitted curves when
/// available.
pub fn simulated_rows(stream: &[SimulatedBatch], cost: Option<&CostParams>) -> Result<Vec<BatchObservation>> {
    stream
        .iter()
        .map(|b| {
            let predicted_cost = cost.map(|c| batch_cost(&b.qualities, c, b.label)).transpose()?;
            Ok(BatchObservation {
                period: b.period,
                size: b.size,
                label: b.label,
                mean_quality: b.qualities.iter().sum::<f64>() / b.qualities.len() as f64,
                observed_cost: None,
                predicted_cost,
            })
        })
        .collect()
}

pub fn run_bootstrap(data: &Dataset, fit: Option<&FitOutcome>, config: &BootstrapConfig) -> Result<BootstrapSummary> {
    match config.mode {
        BootstrapMode::Nonparametric => bootstrap_costs(&observed_costs(data)?, config),
        BootstrapMode::Parametric => {
            let fit = fit.ok_or_else(|| ScormError::Config("parametric bootstrap needs a fitted model".into()))?;
            let cost = fit
                .cost
                .as_ref()
                .ok_or_else(|| ScormError::Validation("parametric bootstrap needs observed costs to fit θ".into()))?;
            let params: HpdParams = fit.hpd.params;
            let labels = working_labels(data, params.threshold());
            bootstrap_parametric(&params, &cost.params, &quality_pools(data, &labels), data.batches.len(), config)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Paths {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub observed: Option<CostPath>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub supplied: Option<CostPath>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fitted: Option<CostPath>,
}

pub fn data_paths(data: &Dataset, fit: Option<&FitOutcome>) -> Result<Paths> {
    let path_of = |costs: Option<Vec<f64>>| -> Result<Option<CostPath>> {
        costs
            .map(|c| {
                let pairs: Vec<(u32, f64)> = data.batches.iter().map(|b| b.period).zip(c).collect();
                cost_path(&pairs)
            })
            .transpose()
    };
    let observed = path_of(data.batches.iter().map(|b| b.observed_cost).collect())?;
    let supplied = path_of(data.batches.iter().map(|b| b.predicted_cost).collect())?;
    let fitted = match fit.and_then(|f| f.cost.as_ref().map(|c| (f, c))) {
        Some((f, c)) => {
            let labels = working_labels(data, f.hpd.params.threshold());
            path_of(Some(fitted_batch_costs(data, &labels, &c.params)?))?
        }
        None => None,
    };
    Ok(Paths {
        observed,
        supplied,
        fitted,
    })
}

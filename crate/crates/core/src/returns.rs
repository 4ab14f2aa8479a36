//! Core return process: regime labels from the size threshold, the
//! Bernoulli extreme-return probability, geometric inter-arrival times,
//! the two-state Markov chain and synthetic return streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScormError};
use crate::evt::HpdParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeLabel {
    Normal,
    Extreme,
}

impl RegimeLabel {
    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(RegimeLabel::Normal),
            1 => Some(RegimeLabel::Extreme),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            RegimeLabel::Normal => 0,
            RegimeLabel::Extreme => 1,
        }
    }

    pub fn is_extreme(self) -> bool {
        self == RegimeLabel::Extreme
    }

    fn index(self) -> usize {
        self.bit() as usize
    }
}

/// Row-stochastic 2×2 transition matrix indexed by [from][to].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionMatrix {
    rows: [[f64; 2]; 2],
}

impl TransitionMatrix {
    pub fn new(rows: [[f64; 2]; 2]) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(ScormError::param(format!(
                    "transition row {i} has an entry outside [0, 1]"
                )));
            }
            if (row[0] + row[1] - 1.0).abs() > 1e-12 {
                return Err(ScormError::param(format!(
                    "transition row {i} sums to {}, not 1",
                    row[0] + row[1]
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Identical rows `[1 − p, p]`: the i.i.d. Bernoulli process.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new([[1.0 - p, p], [1.0 - p, p]])
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        self.rows
    }

    pub fn prob(&self, from: RegimeLabel, to: RegimeLabel) -> f64 {
        self.rows[from.index()][to.index()]
    }

    fn step<R: Rng + ?Sized>(&self, from: RegimeLabel, rng: &mut R) -> RegimeLabel {
        let p = self.prob(from, RegimeLabel::Extreme);
        if rng.random::<f64>() < p {
            RegimeLabel::Extreme
        } else {
            RegimeLabel::Normal
        }
    }
}

/// Label each batch extreme when its size reaches the threshold.
pub fn classify_batches(sizes: &[f64], u: f64) -> Vec<RegimeLabel> {
    sizes
        .iter()
        .map(|&n| {
            if n >= u {
                RegimeLabel::Extreme
            } else {
                RegimeLabel::Normal
            }
        })
        .collect()
}

/// Fraction of extreme labels.
pub fn estimate_p(labels: &[RegimeLabel]) -> Result<f64> {
    if labels.is_empty() {
        return Err(ScormError::input("cannot estimate p from zero batches"));
    }
    let extreme = labels.iter().filter(|l| l.is_extreme()).count();
    Ok(extreme as f64 / labels.len() as f64)
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(ScormError::param(format!("geometric p must lie in (0, 1], got {p}")))
    }
}

/// P(T = t) = (1 − p)^(t−1) p on t = 1, 2, ...
pub fn geometric_pmf(t: u64, p: f64) -> Result<f64> {
    check_p(p)?;
    if t < 1 {
        return Err(ScormError::param("geometric support starts at 1"));
    }
    if p == 1.0 {
        return Ok(if t == 1 { 1.0 } else { 0.0 });
    }
    Ok(((t - 1) as f64 * (-p).ln_1p()).exp() * p)
}

/// Periods until the next extreme return, by inversion.
pub fn sample_inter_arrival<R: Rng + ?Sized>(p: f64, rng: &mut R) -> Result<u64> {
    check_p(p)?;
    if p == 1.0 {
        return Ok(1);
    }
    // 1 − U lies in (0, 1]
    let v = 1.0 - rng.random::<f64>();
    let t = (v.ln() / (-p).ln_1p()).ceil();
    Ok(t.max(1.0) as u64)
}

/// Markov trajectory of length `horizon`, starting at `initial`.
pub fn dtmc_simulate(
    transition: &TransitionMatrix,
    horizon: usize,
    initial: RegimeLabel,
    seed: u64,
) -> Result<Vec<RegimeLabel>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    dtmc_simulate_with(transition, horizon, initial, &mut rng)
}

pub fn dtmc_simulate_with<R: Rng + ?Sized>(
    transition: &TransitionMatrix,
    horizon: usize,
    initial: RegimeLabel,
    rng: &mut R,
) -> Result<Vec<RegimeLabel>> {
    // re-validate: the matrix may have been deserialized
    let transition = TransitionMatrix::new(transition.rows)?;
    if horizon < 1 {
        return Err(ScormError::param("horizon must be at least 1"));
    }
    let mut out = Vec::with_capacity(horizon);
    let mut state = initial;
    out.push(state);
    for _ in 1..horizon {
        state = transition.step(state, rng);
        out.push(state);
    }
    Ok(out)
}

/// Where simulated core qualities come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "kind")]
pub enum QualitySource {
    /// Resample with replacement from observed per-regime qualities.
    Empirical { normal: Vec<f64>, extreme: Vec<f64> },
    /// Beta(a, b) per regime.
    Beta { normal: (f64, f64), extreme: (f64, f64) },
}

impl QualitySource {
    fn validate(&self) -> Result<()> {
        match self {
            QualitySource::Empirical { normal, extreme } => {
                if normal.iter().chain(extreme).any(|q| !(0.0..=1.0).contains(q)) {
                    return Err(ScormError::Config("quality pool values must lie in [0, 1]".into()));
                }
            }
            QualitySource::Beta { normal, extreme } => {
                for (a, b) in [normal, extreme] {
                    if !(*a > 0.0 && *b > 0.0) {
                        return Err(ScormError::Config("beta quality parameters must be positive".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

enum QualitySampler<'a> {
    Pool(&'a [f64]),
    Beta(Beta<f64>),
}

impl QualitySampler<'_> {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            QualitySampler::Pool(pool) => pool[rng.random_range(0..pool.len())],
            QualitySampler::Beta(b) => b.sample(rng),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSimConfig {
    pub horizon: usize,
    pub hpd: HpdParams,
    pub quality: QualitySource,
    pub seed: u64,
    pub transition: TransitionMatrix,
    /// State in the period before the first simulated one.
    pub initial: RegimeLabel,
}

impl ReturnSimConfig {
    /// Bernoulli regime process with the mixture's own tail weight.
    pub fn new(horizon: usize, hpd: HpdParams, quality: QualitySource, seed: u64) -> Result<Self> {
        Ok(Self {
            horizon,
            hpd,
            quality,
            seed,
            transition: TransitionMatrix::bernoulli(hpd.p_extreme)?,
            initial: RegimeLabel::Normal,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedBatch {
    pub period: u32,
    pub size: u32,
    pub label: RegimeLabel,
    pub qualities: Vec<f64>,
}

/// Integer batch size on the regime's side of `u` and at least 1.
fn round_size(raw: f64, u: f64, label: RegimeLabel) -> u32 {
    let rounded = raw.round().max(1.0);
    let size = match label {
        RegimeLabel::Extreme => rounded.max(u.ceil()),
        RegimeLabel::Normal => {
            let largest_below = u.ceil() - 1.0;
            rounded.min(largest_below)
        }
    };
    size.min(u32::MAX as f64) as u32
}

pub fn simulate_return_stream(config: &ReturnSimConfig) -> Result<Vec<SimulatedBatch>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    simulate_return_stream_with(config, &mut rng)
}

/// Regime from the chain, then size from the matching mixture component,
/// then that many qualities from the regime's source.
pub fn simulate_return_stream_with<R: Rng + ?Sized>(
    config: &ReturnSimConfig,
    rng: &mut R,
) -> Result<Vec<SimulatedBatch>> {
    if config.horizon < 1 {
        return Err(ScormError::Config("horizon must be at least 1".into()));
    }
    config.hpd.validate()?;
    config.quality.validate()?;
    let u = config.hpd.gpd.u;
    if u.ceil() - 1.0 < 1.0 && config.hpd.p_extreme < 1.0 {
        return Err(ScormError::Config(format!(
            "threshold {u} leaves no integer normal batch size"
        )));
    }

    let samplers = match &config.quality {
        QualitySource::Empirical { normal, extreme } => [
            QualitySampler::Pool(normal.as_slice()),
            QualitySampler::Pool(extreme.as_slice()),
        ],
        QualitySource::Beta { normal, extreme } => {
            let mk = |(a, b): (f64, f64)| {
                Beta::new(a, b)
                    .map(QualitySampler::Beta)
                    .map_err(|e| ScormError::Config(e.to_string()))
            };
            [mk(*normal)?, mk(*extreme)?]
        }
    };

    // the first element is the pre-sample state
    let labels = dtmc_simulate_with(&config.transition, config.horizon + 1, config.initial, rng)?;
    let mut out = Vec::with_capacity(config.horizon);
    for (i, &label) in labels[1..].iter().enumerate() {
        let raw = match label {
            RegimeLabel::Normal => config.hpd.body_quantile(rng.random::<f64>()),
            RegimeLabel::Extreme => config.hpd.gpd.quantile(rng.random::<f64>()),
        };
        let size = round_size(raw, u, label);
        let sampler = &samplers[label.index()];
        if let QualitySampler::Pool(pool) = sampler {
            if pool.is_empty() {
                return Err(ScormError::Config(format!(
                    "empty quality pool for the {label:?} regime"
                )));
            }
        }
        let qualities = (0..size).map(|_| sampler.draw(rng)).collect();
        out.push(SimulatedBatch {
            period: (i + 1) as u32,
            size,
            label,
            qualities,
        });
    }
    Ok(out)
}

//! Command-line front end. Every command defaults to the bundled
//! 81-batch case study when no input file is named.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use scorm::bootstrap::{BootstrapConfig, BootstrapMode};
use scorm::evt::ThresholdSelection;
use scorm::io::{write_batches, FIXTURE_CSV};
use scorm::pipeline::{
    data_paths, load_dataset, run_bootstrap, run_fit, run_simulate, run_validate, simulated_rows, DataSource, Dataset,
    FitOutcome,
};
use scorm::report::{bootstrap_series, report_series, to_json, write_series, Provenance, RunReport};
use scorm::{Result, ScormError};

#[derive(Parser)]
#[command(name = "scorm", version, about = "Stochastic remanufacturing cost model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit the size mixture, the cost curves and the goodness-of-fit test.
    Fit(Common),
    /// Error metrics of predicted against observed batch costs.
    Validate(Common),
    /// Simulate a return stream from the fitted model.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: Seed,
        /// Periods to simulate; defaults to the number of input batches.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Bootstrap envelope of the cumulative cost path.
    Bootstrap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: Seed,
        #[command(flatten)]
        boot: Boot,
    },
    /// Full run report: fit, metrics, paths and bootstrap summary.
    Report {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        seed: Seed,
        #[command(flatten)]
        boot: Boot,
    },
    /// Write the bundled case-study batch file.
    Fixture {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// Core-level CSV (one row per returned core).
    #[arg(long, conflicts_with = "batches")]
    cores: Option<PathBuf>,
    /// Batch-level CSV (one row per period).
    #[arg(long)]
    batches: Option<PathBuf>,
    /// `AUTO` for profile-likelihood selection, or a fixed value.
    #[arg(long, default_value = "AUTO", value_parser = parse_threshold)]
    threshold: ThresholdSelection,
    /// Maximum core cost a0 used for both regimes.
    #[arg(long, default_value_t = 500.0)]
    a0: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct Seed {
    #[arg(long, required = true)]
    seed: u64,
}

#[derive(Args)]
struct Boot {
    #[arg(long, default_value_t = 3000)]
    replicates: usize,
    #[arg(long, value_enum, default_value_t = Mode::Parametric)]
    mode: Mode,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Nonparametric,
    Parametric,
}

impl From<Mode> for BootstrapMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Nonparametric => BootstrapMode::Nonparametric,
            Mode::Parametric => BootstrapMode::Parametric,
        }
    }
}

fn parse_threshold(s: &str) -> std::result::Result<ThresholdSelection, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(ThresholdSelection::Auto);
    }
    match s.parse::<f64>() {
        Ok(u) if u.is_finite() && u > 0.0 => Ok(ThresholdSelection::Fixed(u)),
        _ => Err(format!("expected AUTO or a positive number, got `{s}`")),
    }
}

impl Common {
    fn source(&self) -> DataSource {
        match (&self.cores, &self.batches) {
            (Some(p), _) => DataSource::Cores(p.clone()),
            (None, Some(p)) => DataSource::Batches(p.clone()),
            (None, None) => DataSource::Fixture,
        }
    }

    fn load(&self) -> Result<Dataset> {
        let fixed = match self.threshold {
            ThresholdSelection::Fixed(u) => Some(u),
            ThresholdSelection::Auto => None,
        };
        let data = load_dataset(&self.source(), fixed)?;
        for w in &data.warnings {
            eprintln!("warning: {w}");
        }
        Ok(data)
    }

    fn writer(&self) -> Result<Box<dyn Write>> {
        open_out(self.out.as_ref())
    }

    fn settings(&self) -> Vec<(String, String)> {
        let t = match self.threshold {
            ThresholdSelection::Auto => "AUTO".to_string(),
            ThresholdSelection::Fixed(u) => u.to_string(),
        };
        vec![("threshold".into(), t), ("a0".into(), self.a0.to_string())]
    }
}

fn open_out(out: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|source| ScormError::Io {
            path: p.display().to_string(),
            source,
        })?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_err(source: io::Error) -> ScormError {
    ScormError::Io {
        path: "<output>".into(),
        source,
    }
}

fn emit(mut w: Box<dyn Write>, text: &str) -> Result<()> {
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(io_err)
}

fn fit_text(f: &FitOutcome) -> String {
    let p = &f.hpd.params;
    let mut s = format!(
        "u = {}\np = {:.4}\nn0 = {}\nn1 = {}\nmu = {:.4}\nsigma = {:.4}\nxi = {:.4}\nbeta = {:.4}\nlogLikelihood = {:.4}\n",
        p.threshold(),
        f.p_hat,
        f.hpd.n_normal,
        f.hpd.n_extreme,
        p.mu,
        p.sigma,
        p.gpd.xi,
        p.gpd.beta,
        f.hpd.log_likelihood
    );
    if let Some(c) = &f.cost {
        s += &format!(
            "thetaNormal = {:.6}\nthetaExtreme = {:.6}\n",
            c.params.theta_normal, c.params.theta_extreme
        );
    }
    if let Some(g) = &f.gof {
        s += &format!(
            "chiSquare = {:.4}\ndf = {}\npValue = {:.4}\n",
            g.statistic, g.degrees_of_freedom, g.p_value
        );
    }
    for n in &f.notes {
        s += &format!("note: {n}\n");
    }
    s
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(c) => {
            let data = c.load()?;
            let fit = run_fit(&data, c.threshold, c.a0)?;
            let text = match c.format {
                Some(Format::Json) => to_json(&fit)?,
                _ => fit_text(&fit),
            };
            emit(c.writer()?, &text)
        }
        Command::Validate(c) => {
            let data = c.load()?;
            let fit = run_fit(&data, c.threshold, c.a0).ok();
            let m = run_validate(&data, fit.as_ref())?;
            let text = match c.format {
                Some(Format::Json) => to_json(&m)?,
                _ => {
                    let mut s = String::new();
                    if let Some(p) = &m.supplied {
                        s += &format!(
                            "mse = {:.2}\npercentError = {:.4}\npredictedTotal = {}\nobservedTotal = {}\n",
                            p.mse, p.percent_error, p.predicted_total, m.observed_total
                        );
                    }
                    if let Some(p) = &m.fitted {
                        s += &format!("fittedMse = {:.2}\nfittedPercentError = {:.4}\n", p.mse, p.percent_error);
                    }
                    s += &format!(
                        "zerorMse = {:.2}\nextremeCoreShare = {:.4}\nextremeCostShare = {:.4}\n",
                        m.zeror_mse, m.extreme_core_share, m.extreme_cost_share
                    );
                    s
                }
            };
            emit(c.writer()?, &text)
        }
        Command::Simulate { common: c, seed, horizon } => {
            let data = c.load()?;
            let fit = run_fit(&data, c.threshold, c.a0)?;
            let stream = run_simulate(&data, &fit, horizon.unwrap_or(data.batches.len()), seed.seed)?;
            match c.format {
                Some(Format::Json) => emit(c.writer()?, &to_json(&stream)?),
                _ => {
                    let rows = simulated_rows(&stream, fit.cost.as_ref().map(|x| &x.params))?;
                    write_batches(c.writer()?, &rows)
                }
            }
        }
        Command::Bootstrap { common: c, seed, boot } => {
            let data = c.load()?;
            let mode: BootstrapMode = boot.mode.into();
            let fit = match mode {
                BootstrapMode::Parametric => Some(run_fit(&data, c.threshold, c.a0)?),
                BootstrapMode::Nonparametric => None,
            };
            let cfg = BootstrapConfig::new(mode, seed.seed).with_replicates(boot.replicates);
            let summary = run_bootstrap(&data, fit.as_ref(), &cfg)?;
            match c.format {
                Some(Format::Csv) => write_series(c.writer()?, &bootstrap_series(&summary)),
                _ => emit(c.writer()?, &to_json(&summary)?),
            }
        }
        Command::Report { common: c, seed, boot } => {
            let data = c.load()?;
            let fit = run_fit(&data, c.threshold, c.a0)?;
            let mut warnings = data.warnings.clone();
            let metrics = match run_validate(&data, Some(&fit)) {
                Ok(m) => Some(m),
                Err(e) => {
                    warnings.push(format!("metrics skipped: {e}"));
                    None
                }
            };
            let cfg = BootstrapConfig::new(boot.mode.into(), seed.seed).with_replicates(boot.replicates);
            let bootstrap = if data.batches.iter().all(|b| b.observed_cost.is_some()) {
                Some(run_bootstrap(&data, Some(&fit), &cfg)?)
            } else {
                warnings.push("bootstrap skipped: observed costs missing".into());
                None
            };
            let mut settings = c.settings();
            settings.push(("replicates".into(), boot.replicates.to_string()));
            settings.push(("mode".into(), cfg.mode.to_string()));
            let report = RunReport {
                provenance: Provenance::new(Some(seed.seed), vec![data.input.clone()], settings),
                paths: data_paths(&data, Some(&fit))?,
                fit,
                metrics,
                bootstrap,
                warnings,
            };
            match c.format {
                Some(Format::Csv) => write_series(c.writer()?, &report_series(&report.paths, report.bootstrap.as_ref())),
                _ => emit(c.writer()?, &to_json(&report)?),
            }
        }
        Command::Fixture { out } => emit(open_out(out.as_ref())?, FIXTURE_CSV),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

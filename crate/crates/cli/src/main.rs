//! Command-line interface for the INAR goodness-of-fit toolkit.

mod input;
mod output;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use inar_gof::bootstrap::gof_test;
use inar_gof::dgp::{simulate, RngStream};
use inar_gof::estimate::{fit_semiparametric, FitOptions};
use inar_gof::gof::StatConfig;
use inar_gof::harness::{preset, run_table, ExperimentSpec, PRESET_NAMES};
use inar_gof::pgf::discrepancy_grid;
use inar_gof::series::{sample_acf, sample_moments, sample_pacf};
use inar_gof::Error;

use output::{emit, to_json, EstimateReport, TestReport};

/// A failed run, split by exit code: input problems exit 2, computation
/// problems exit 3. Rejection of the null is a result, not a failure.
#[derive(Debug)]
pub enum Failure {
    Input(String),
    Compute(String),
}

fn classify(e: Error) -> Failure {
    match e {
        Error::EmptyInput
        | Error::NegativeValue { .. }
        | Error::NonIntegerValue { .. }
        | Error::InvalidParameter(_)
        | Error::NonIntegerWeight { .. }
        | Error::Io(_) => Failure::Input(e.to_string()),
        Error::DegenerateSeries(_) | Error::ZeroLikelihood { .. } | Error::DegenerateInput(_) => {
            Failure::Compute(e.to_string())
        }
    }
}

#[derive(Parser)]
#[command(
    name = "inar-gof",
    version,
    about = "Semi-parametric goodness-of-fit testing for INAR count time series"
)]
struct Cli {
    /// Worker threads (default: all cores). INAR_GOF_THREADS overrides.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Exact pair-sum evaluation (integer weight exponents only).
    Closed,
    /// Tensor-product Gauss-Legendre quadrature.
    Quad,
}

#[derive(Subcommand)]
enum Command {
    /// Test a count series against the semi-parametric INAR(p) null.
    Test {
        /// Series file: one count per line, '#' comments; '-' for stdin.
        input: PathBuf,
        /// INAR order p to fit.
        #[arg(long, default_value_t = 1)]
        order: usize,
        /// Statistic order s >= p; defaults to the fitted order.
        #[arg(long)]
        stat_order: Option<usize>,
        /// Weight exponent a; larger concentrates weight near u = 1.
        #[arg(long, default_value_t = 5.0)]
        weight: f64,
        /// Bootstrap replicates B.
        #[arg(long, default_value_t = 1000)]
        bootstrap: usize,
        /// Bootstrap pre-run (burn-in) length.
        #[arg(long, default_value_t = 100)]
        burnin: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// RNG stream index, for independent runs under one seed.
        #[arg(long, default_value_t = 0)]
        stream: u64,
        /// Evaluation method; default: closed for integer weights, quad otherwise.
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Emit the machine-readable JSON document instead of a summary.
        #[arg(long)]
        json: bool,
        /// Output file (atomic write); stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the thinning coefficients and innovation distribution only.
    Estimate {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a count series from a data generating process.
    Simulate {
        /// DGP spec, e.g. poi-inar1:lambda=1,alpha=0.5 (see --help for names).
        #[arg(long)]
        dgp: String,
        #[arg(long)]
        n: usize,
        /// Burn-in before the retained stretch (default 100).
        #[arg(long)]
        burnin: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moments, dispersion index, and ACF/PACF of a series, as CSV.
    Summary {
        input: PathBuf,
        #[arg(long, default_value_t = 10)]
        max_lag: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte Carlo size/power table and write it as CSV.
    Experiment {
        /// Named preset grid.
        #[arg(long, conflicts_with = "spec", value_parser = PRESET_NAMES)]
        preset: Option<String>,
        /// JSON file with an array of experiment specs.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Monte Carlo samples per cell for --preset.
        #[arg(long, default_value_t = 500)]
        scale: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Weighted squared pgf discrepancy surface of an INAR(1) fit, as CSV.
    Heatmap {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        order: usize,
        #[arg(long, default_value_t = 5.0)]
        weight: f64,
        /// Lattice points per axis.
        #[arg(long, default_value_t = 41)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::Level::Warn
    }

    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            eprintln!("{}: {}", record.level().to_string().to_lowercase(), record.args());
        }
    }

    fn flush(&self) {}
}

static LOGGER: StderrLogger = StderrLogger;

fn main() {
    let cli = Cli::parse();
    if log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(log::LevelFilter::Warn);
    }
    let code = match configure_threads(cli.threads).and_then(|()| run(cli.command)) {
        Ok(()) => 0,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            3
        }
    };
    std::process::exit(code);
}

fn configure_threads(flag: Option<usize>) -> Result<(), Failure> {
    let threads = match std::env::var("INAR_GOF_THREADS") {
        Ok(raw) => Some(raw.parse::<usize>().map_err(|_| {
            Failure::Input(format!("INAR_GOF_THREADS must be a positive integer, got '{raw}'"))
        })?),
        Err(_) => flag,
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(Failure::Input("thread count must be at least 1".to_string()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Input(format!("cannot configure thread pool: {e}")))?;
    }
    Ok(())
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Test {
            input,
            order,
            stat_order,
            weight,
            bootstrap,
            burnin,
            seed,
            stream,
            method,
            json,
            out,
        } => {
            let series = input::read_series(&input)?;
            let s = stat_order.unwrap_or(order);
            let cfg = match method {
                Some(MethodArg::Closed) => StatConfig::closed_form(s, weight),
                Some(MethodArg::Quad) => StatConfig::quadrature(s, weight, None),
                None if weight.fract() == 0.0 => StatConfig::closed_form(s, weight),
                None => StatConfig::quadrature(s, weight, None),
            }
            .map_err(classify)?;
            let res = gof_test(&series, order, &cfg, bootstrap, burnin, RngStream::new(seed, stream))
                .map_err(classify)?;
            let report = TestReport::new(series.n(), order, burnin, method_name(&cfg), &res);
            let text = if json { to_json(&report)? } else { report.human() };
            emit(out.as_deref(), &text)
        }
        Command::Estimate { input, order, json, out } => {
            let series = input::read_series(&input)?;
            let fit = fit_semiparametric(&series, order, FitOptions::default()).map_err(classify)?;
            let report = EstimateReport::new(series.n(), order, &fit);
            let text = if json { to_json(&report)? } else { report.human() };
            emit(out.as_deref(), &text)
        }
        Command::Simulate { dgp, n, burnin, seed, stream, out } => {
            let spec = input::parse_dgp(&dgp, burnin)?;
            let series = simulate(&spec, n, RngStream::new(seed, stream)).map_err(classify)?;
            let mut text = format!("# {dgp} n={n} seed={seed} stream={stream}\n");
            for value in series.values() {
                let _ = writeln!(text, "{value}");
            }
            emit(out.as_deref(), &text)
        }
        Command::Summary { input, max_lag, out } => {
            let series = input::read_series(&input)?;
            let text = summary_csv(&series, max_lag)?;
            emit(out.as_deref(), &text)
        }
        Command::Experiment { preset: preset_name, spec, scale, seed, out } => {
            let specs: Vec<ExperimentSpec> = match (preset_name, spec) {
                (Some(name), None) => preset(&name, scale, seed).map_err(classify)?,
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| {
                        Failure::Input(format!("cannot read {}: {e}", path.display()))
                    })?;
                    serde_json::from_str(&text).map_err(|e| {
                        Failure::Input(format!("cannot parse {}: {e}", path.display()))
                    })?
                }
                _ => {
                    return Err(Failure::Input(
                        "exactly one of --preset or --spec is required".to_string(),
                    ));
                }
            };
            let mut csv = Vec::new();
            run_table(&specs, &mut csv).map_err(classify)?;
            let text = String::from_utf8(csv).expect("CSV output is UTF-8");
            emit(out.as_deref(), &text)
        }
        Command::Heatmap { input, order, weight, grid, out } => {
            if order != 1 {
                return Err(Failure::Input(
                    "the discrepancy surface is two-dimensional; only --order 1 is supported"
                        .to_string(),
                ));
            }
            let series = input::read_series(&input)?;
            let fit = fit_semiparametric(&series, 1, FitOptions::default()).map_err(classify)?;
            let cells = discrepancy_grid(&series, &fit.model, weight, grid).map_err(classify)?;
            let mut text = String::from("u0,u1,value\n");
            for cell in cells {
                let _ = writeln!(text, "{},{},{}", cell.u0, cell.u1, cell.value);
            }
            emit(out.as_deref(), &text)
        }
    }
}

fn method_name(cfg: &StatConfig) -> &'static str {
    match cfg.method {
        inar_gof::Method::ClosedForm => "closed",
        inar_gof::Method::Quadrature { .. } => "quad",
    }
}

fn summary_csv(series: &inar_gof::CountSeries, max_lag: usize) -> Result<String, Failure> {
    let moments = sample_moments(series).map_err(classify)?;
    // Short series get a shorter default lag range instead of an error.
    let lag = max_lag.min(series.n().saturating_sub(1)).max(1);
    let acf = sample_acf(series, lag).map_err(classify)?;
    let pacf = sample_pacf(series, lag).map_err(classify)?;
    let mut text = String::from("statistic,lag,value\n");
    let _ = writeln!(text, "n,,{}", series.n());
    let _ = writeln!(text, "mean,,{}", moments.mean);
    let _ = writeln!(text, "variance,,{}", moments.variance);
    let _ = writeln!(text, "dispersion,,{}", moments.dispersion);
    for k in 1..=lag {
        let _ = writeln!(text, "acf,{k},{}", acf[k]);
    }
    for k in 1..=lag {
        let _ = writeln!(text, "pacf,{k},{}", pacf[k]);
    }
    Ok(text)
}

//! Bootstrap calibration of the goodness-of-fit statistic.
//!
//! The null distribution of the statistic depends on the unknown innovation
//! law, so critical values come from a semi-parametric INAR bootstrap: fit
//! the model, simulate from the fitted model, refit on each pseudo-series,
//! and recompute the statistic. [`gof_test`] runs the complete procedure on
//! one observed series; [`warp_speed_experiment`] runs the one-replicate
//! warp-speed scheme across many Monte Carlo samples, pooling bootstrap
//! statistics so that size and power studies need `M` instead of `M * B`
//! bootstrap replicates.
//!
//! All parallelism is over replicate or sample index with results assembled
//! in index order, so outputs are bit-identical for a given [`RngStream`]
//! regardless of thread count.
//!
//! ```
//! use inar_gof::bootstrap::warp_speed_experiment;
//! use inar_gof::dgp::{DgpSpec, InnovationFamily, RngStream};
//! use inar_gof::gof::StatConfig;
//!
//! let dgp = DgpSpec::inar(InnovationFamily::Poisson { lambda: 1.0 }, vec![0.4])?;
//! let cfg = StatConfig::closed_form(1, 2.0)?;
//! let run = warp_speed_experiment(&dgp, 60, 1, &cfg, 50, 50, RngStream::new(3, 0))?;
//! let size = run.rejection_rate(0.05)?;
//! assert!((0.0..=1.0).contains(&size));
//! # Ok::<(), inar_gof::Error>(())
//! ```

use rayon::prelude::*;
use serde::Serialize;

use crate::dgp::{inar_path, simulate, DgpSpec, RngStream};
use crate::estimate::{fit_semiparametric, FitOptions, FitResult};
use crate::gof::{tn, StatConfig};
use crate::series::CountSeries;
use crate::{Error, Result};

/// Outcome of a bootstrap goodness-of-fit test.
#[derive(Debug, Clone, Serialize)]
pub struct GofResult {
    pub statistic: f64,
    /// `(1 + #{T* >= T}) / (B_kept + 1)`.
    pub p_value: f64,
    /// Bootstrap statistics from the replicates that refit successfully.
    pub replicates: Vec<f64>,
    pub fit: FitResult,
    pub cfg: StatConfig,
    /// Requested number of replicates.
    pub b: usize,
    /// Replicates dropped because the refit degenerated.
    pub excluded: usize,
    pub seed: RngStream,
}

/// Tests an observed series against the INAR(p) class.
///
/// Each replicate simulates `n + r` values from the fitted model, started at
/// the rounded mean of the observed series, drops the first `r`, refits, and
/// recomputes the statistic. Replicate `i` draws from `seed.substream(i)`.
pub fn gof_test(
    series: &CountSeries,
    p: usize,
    cfg: &StatConfig,
    b: usize,
    r: usize,
    seed: RngStream,
) -> Result<GofResult> {
    cfg.check()?;
    if b == 0 {
        return Err(Error::invalid("need at least one bootstrap replicate"));
    }
    if cfg.s < p {
        return Err(Error::invalid(format!(
            "statistic order s = {} must be at least the fitted order p = {p}",
            cfg.s
        )));
    }
    let fit = fit_semiparametric(series, p, FitOptions::default())?;
    if fit.degenerate {
        return Err(Error::DegenerateInput(
            "constant series: the fitted model carries no information to bootstrap",
        ));
    }
    let statistic = tn(series, &fit.model, cfg)?;
    let n = series.n();
    let init = series.mean().round() as u32;

    let draws: Vec<Option<f64>> = (0..b)
        .into_par_iter()
        .map(|rep| replicate_statistic(&fit, n, p, cfg, r, init, seed.substream(rep as u64)))
        .collect();
    let replicates: Vec<f64> = draws.iter().flatten().copied().collect();
    let excluded = b - replicates.len();
    if excluded * 100 > b {
        log::warn!("{excluded} of {b} bootstrap replicates were excluded as degenerate");
    }
    if replicates.is_empty() {
        return Err(Error::DegenerateInput("every bootstrap replicate failed to refit"));
    }
    let exceed = replicates.iter().filter(|t| **t >= statistic).count();
    let p_value = (1 + exceed) as f64 / (replicates.len() + 1) as f64;
    Ok(GofResult {
        statistic,
        p_value,
        replicates,
        fit,
        cfg: *cfg,
        b,
        excluded,
        seed,
    })
}

fn replicate_statistic(
    fit: &FitResult,
    n: usize,
    p: usize,
    cfg: &StatConfig,
    r: usize,
    init: u32,
    stream: RngStream,
) -> Option<f64> {
    let mut rng = stream.rng();
    let values = inar_path(&fit.model, n, r, init, &mut rng);
    let pseudo = CountSeries::from_counts(values).ok()?;
    let refit = fit_semiparametric(&pseudo, p, FitOptions::default()).ok()?;
    if refit.degenerate {
        return None;
    }
    tn(&pseudo, &refit.model, cfg).ok()
}

/// One warp-speed Monte Carlo run: per-sample statistics plus the pooled
/// single-replicate bootstrap statistics.
#[derive(Debug, Clone)]
pub struct WarpSpeedRun {
    /// Statistic of each retained sample.
    pub statistics: Vec<f64>,
    /// One bootstrap statistic per retained sample, pooled for calibration.
    pub boot_statistics: Vec<f64>,
    /// Requested number of samples `M`.
    pub requested: usize,
    /// Samples dropped because a fit or refit degenerated.
    pub excluded: usize,
}

impl WarpSpeedRun {
    /// Empirical `(1 - gamma)`-quantile of the pooled bootstrap statistics.
    /// At `gamma = 1` the threshold is below every statistic.
    pub fn critical_value(&self, gamma: f64) -> f64 {
        let mut pool = self.boot_statistics.clone();
        pool.sort_by(f64::total_cmp);
        let k = ((1.0 - gamma) * pool.len() as f64).ceil() as usize;
        if k == 0 {
            return f64::NEG_INFINITY;
        }
        pool[k.min(pool.len()) - 1]
    }

    /// Share of retained samples whose statistic exceeds the critical value.
    pub fn rejection_rate(&self, gamma: f64) -> Result<f64> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::invalid(format!("level gamma must lie in (0, 1], got {gamma}")));
        }
        if self.statistics.is_empty() {
            return Err(Error::DegenerateInput("no samples were retained"));
        }
        let crit = self.critical_value(gamma);
        let rejected = self.statistics.iter().filter(|t| **t > crit).count();
        Ok(rejected as f64 / self.statistics.len() as f64)
    }

    /// Excluded share of the requested samples.
    pub fn excluded_share(&self) -> f64 {
        self.excluded as f64 / self.requested as f64
    }
}

/// Runs the warp-speed scheme: for each of `m` samples from `dgp`, fit,
/// compute the statistic, and add a single bootstrap statistic to the pool.
/// Sample `i` simulates from `seed.substream(2i)` and bootstraps from
/// `seed.substream(2i + 1)`.
pub fn warp_speed_experiment(
    dgp: &DgpSpec,
    n: usize,
    p: usize,
    cfg: &StatConfig,
    m: usize,
    r: usize,
    seed: RngStream,
) -> Result<WarpSpeedRun> {
    cfg.check()?;
    dgp.check()?;
    if m < 50 {
        return Err(Error::invalid(format!(
            "warp-speed calibration needs at least 50 samples, got {m}"
        )));
    }
    if cfg.s < p {
        return Err(Error::invalid(format!(
            "statistic order s = {} must be at least the fitted order p = {p}",
            cfg.s
        )));
    }
    let pairs: Vec<Option<(f64, f64)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let data = simulate(dgp, n, seed.substream(2 * i as u64)).ok()?;
            let fit = fit_semiparametric(&data, p, FitOptions::default()).ok()?;
            if fit.degenerate {
                return None;
            }
            let t = tn(&data, &fit.model, cfg).ok()?;
            let t_boot = replicate_statistic(
                &fit,
                n,
                p,
                cfg,
                r,
                data.mean().round() as u32,
                seed.substream(2 * i as u64 + 1),
            )?;
            Some((t, t_boot))
        })
        .collect();

    let mut statistics = Vec::with_capacity(m);
    let mut boot_statistics = Vec::with_capacity(m);
    for pair in pairs.iter().flatten() {
        statistics.push(pair.0);
        boot_statistics.push(pair.1);
    }
    let excluded = m - statistics.len();
    if excluded * 100 > m {
        log::warn!("{excluded} of {m} warp-speed samples were excluded as degenerate");
    }
    Ok(WarpSpeedRun { statistics, boot_statistics, requested: m, excluded })
}

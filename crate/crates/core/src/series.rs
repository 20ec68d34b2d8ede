//! Count series container, validation, descriptive statistics, and the
//! discrete model types shared by the rest of the crate.
//!
//! ```
//! use inar_gof::series::{sample_acf, sample_moments, CountSeries};
//!
//! let series = CountSeries::from_counts(vec![3, 2, 2, 1, 0, 1, 2, 4, 3, 2])?;
//! let moments = sample_moments(&series)?;
//! assert!(moments.dispersion > 0.0);
//! let acf = sample_acf(&series, 3)?;
//! assert_eq!(acf[0], 1.0);
//! # Ok::<(), inar_gof::Error>(())
//! ```

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An observed count time series, stored in time order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSeries {
    values: Vec<u32>,
}

impl CountSeries {
    /// Wraps already-integer counts. Fails only on an empty input.
    pub fn from_counts(values: Vec<u32>) -> Result<CountSeries> {
        if values.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(CountSeries { values })
    }

    /// Validates raw numeric input as counts.
    ///
    /// Each entry must be a finite non-negative integer. The error carries the
    /// zero-based index of the first offending entry.
    pub fn validate(raw: &[f64]) -> Result<CountSeries> {
        if raw.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut values = Vec::with_capacity(raw.len());
        for (index, &x) in raw.iter().enumerate() {
            if x < 0.0 {
                return Err(Error::NegativeValue { index });
            }
            if !x.is_finite() || x.fract() != 0.0 {
                return Err(Error::NonIntegerValue { index });
            }
            if x > u32::MAX as f64 {
                return Err(Error::invalid(format!("count at index {index} is too large")));
            }
            values.push(x as u32);
        }
        Ok(CountSeries { values })
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn max(&self) -> u32 {
        *self.values.iter().max().expect("series is non-empty")
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().map(|&x| x as f64).sum::<f64>() / self.n() as f64
    }

    pub fn is_constant(&self) -> bool {
        self.values.iter().all(|&x| x == self.values[0])
    }
}

/// Sample mean, variance (denominator `n - 1`), and the dispersion index
/// `variance / mean`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub dispersion: f64,
}

/// Computes [`Moments`] for a series with at least two observations.
///
/// An all-zero series has no dispersion index (`0/0`) and yields
/// [`Error::DegenerateSeries`].
pub fn sample_moments(series: &CountSeries) -> Result<Moments> {
    let n = series.n();
    if n < 2 {
        return Err(Error::DegenerateSeries("need at least two observations"));
    }
    let mean = series.mean();
    if mean == 0.0 {
        return Err(Error::DegenerateSeries("all-zero series has no dispersion index"));
    }
    let ss: f64 = series
        .values()
        .iter()
        .map(|&x| {
            let d = x as f64 - mean;
            d * d
        })
        .sum();
    let variance = ss / (n - 1) as f64;
    Ok(Moments { mean, variance, dispersion: variance / mean })
}

/// Sample autocorrelations `[1, r(1), ..., r(max_lag)]`.
///
/// Autocovariances use the biased denominator `n`, the usual convention for
/// correlograms. Requires `1 <= max_lag < n`; a constant series has zero
/// variance and yields [`Error::DegenerateSeries`].
pub fn sample_acf(series: &CountSeries, max_lag: usize) -> Result<Vec<f64>> {
    let n = series.n();
    if max_lag == 0 || max_lag >= n {
        return Err(Error::invalid(format!(
            "max_lag must satisfy 1 <= max_lag < n, got max_lag = {max_lag}, n = {n}"
        )));
    }
    let mean = series.mean();
    let x = series.values();
    let c0: f64 = x
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n as f64;
    if c0 == 0.0 {
        return Err(Error::DegenerateSeries("constant series has no autocorrelation"));
    }
    let mut acf = Vec::with_capacity(max_lag + 1);
    acf.push(1.0);
    for h in 1..=max_lag {
        let ch: f64 = (0..n - h)
            .map(|t| (x[t] as f64 - mean) * (x[t + h] as f64 - mean))
            .sum::<f64>()
            / n as f64;
        acf.push(ch / c0);
    }
    Ok(acf)
}

/// Sample partial autocorrelations `[1, pacf(1), ..., pacf(max_lag)]` via the
/// Durbin-Levinson recursion, so `pacf(1) == acf(1)`.
pub fn sample_pacf(series: &CountSeries, max_lag: usize) -> Result<Vec<f64>> {
    let acf = sample_acf(series, max_lag)?;
    Ok(levinson(&acf)?.0)
}

/// Durbin-Levinson recursion on `rho = [1, r(1), ..., r(m)]`.
///
/// Returns the PACF sequence `[1, phi_11, ..., phi_mm]` and the final
/// autoregressive coefficient row `(phi_m1, ..., phi_mm)`.
pub(crate) fn levinson(rho: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = rho.len() - 1;
    let mut pacf = Vec::with_capacity(m + 1);
    pacf.push(1.0);
    let mut phi: Vec<f64> = Vec::new();
    for k in 1..=m {
        let phi_kk = if k == 1 {
            rho[1]
        } else {
            let num = rho[k] - (1..k).map(|j| phi[j - 1] * rho[k - j]).sum::<f64>();
            let den = 1.0 - (1..k).map(|j| phi[j - 1] * rho[j]).sum::<f64>();
            if den.abs() < 1e-12 {
                return Err(Error::DegenerateSeries(
                    "partial autocorrelation recursion is singular",
                ));
            }
            num / den
        };
        let mut next = Vec::with_capacity(k);
        for j in 1..k {
            next.push(phi[j - 1] - phi_kk * phi[k - j - 1]);
        }
        next.push(phi_kk);
        phi = next;
        pacf.push(phi_kk);
    }
    Ok((pacf, phi))
}

/// A probability mass function on `{0, 1, ..., K}`, stored densely.
///
/// `K` is the largest index carrying positive mass; trailing zeros are
/// trimmed on construction. Masses are renormalized to sum to one exactly
/// when the raw sum is within `1e-9` of one, and rejected otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Pmf {
    masses: Vec<f64>,
}

impl Pmf {
    pub fn new(masses: Vec<f64>) -> Result<Pmf> {
        if masses.is_empty() {
            return Err(Error::invalid("pmf must have at least one mass"));
        }
        for (k, &m) in masses.iter().enumerate() {
            if !(0.0..=1.0 + 1e-9).contains(&m) || !m.is_finite() {
                return Err(Error::invalid(format!("pmf mass at {k} is {m}, outside [0, 1]")));
            }
        }
        let sum: f64 = masses.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::invalid(format!("pmf masses sum to {sum}, not 1")));
        }
        Ok(Pmf::renormalized(masses))
    }

    /// Normalizes arbitrary non-negative weights with a positive sum.
    /// Used for empirical frequencies, where the raw sum is far from one.
    pub fn from_weights(weights: Vec<f64>) -> Result<Pmf> {
        if weights.is_empty() {
            return Err(Error::invalid("pmf must have at least one mass"));
        }
        if weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return Err(Error::invalid("pmf weights must be finite and non-negative"));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::invalid("pmf weights must have a positive sum"));
        }
        Ok(Pmf::renormalized(weights))
    }

    pub fn point_mass(k: usize) -> Pmf {
        let mut masses = vec![0.0; k + 1];
        masses[k] = 1.0;
        Pmf { masses }
    }

    fn renormalized(mut masses: Vec<f64>) -> Pmf {
        let sum: f64 = masses.iter().sum();
        for m in &mut masses {
            *m /= sum;
        }
        while masses.len() > 1 && *masses.last().unwrap() == 0.0 {
            masses.pop();
        }
        Pmf { masses }
    }

    /// Mass at `k`; zero beyond the stored support.
    pub fn mass(&self, k: usize) -> f64 {
        self.masses.get(k).copied().unwrap_or(0.0)
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Largest support point `K`.
    pub fn support_max(&self) -> usize {
        self.masses.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.masses.iter().enumerate().map(|(k, &m)| k as f64 * m).sum()
    }
}

impl TryFrom<Vec<f64>> for Pmf {
    type Error = Error;
    fn try_from(masses: Vec<f64>) -> Result<Pmf> {
        Pmf::new(masses)
    }
}

impl From<Pmf> for Vec<f64> {
    fn from(pmf: Pmf) -> Vec<f64> {
        pmf.masses
    }
}

/// An INAR(p) model: thinning coefficients plus an innovation distribution.
///
/// Each `alpha_j` lies in `[0, 1]` and the sum is strictly below one, the
/// stationarity region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInarModel")]
pub struct InarModel {
    alphas: Vec<f64>,
    innovations: Pmf,
}

impl InarModel {
    pub fn new(alphas: Vec<f64>, innovations: Pmf) -> Result<InarModel> {
        if alphas.is_empty() {
            return Err(Error::invalid("INAR order must be at least 1"));
        }
        for (j, &a) in alphas.iter().enumerate() {
            if !(0.0..=1.0).contains(&a) || !a.is_finite() {
                return Err(Error::invalid(format!("alpha_{} = {a} is outside [0, 1]", j + 1)));
            }
        }
        let sum: f64 = alphas.iter().sum();
        if sum >= 1.0 {
            return Err(Error::invalid(format!("thinning coefficients sum to {sum} >= 1")));
        }
        Ok(InarModel { alphas, innovations })
    }

    pub fn order(&self) -> usize {
        self.alphas.len()
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn innovations(&self) -> &Pmf {
        &self.innovations
    }

    /// Stationary mean `E(e) / (1 - sum alpha_j)`.
    pub fn stationary_mean(&self) -> f64 {
        self.innovations.mean() / (1.0 - self.alphas.iter().sum::<f64>())
    }
}

#[derive(Deserialize)]
struct RawInarModel {
    alphas: Vec<f64>,
    innovations: Pmf,
}

impl TryFrom<RawInarModel> for InarModel {
    type Error = Error;
    fn try_from(raw: RawInarModel) -> Result<InarModel> {
        InarModel::new(raw.alphas, raw.innovations)
    }
}

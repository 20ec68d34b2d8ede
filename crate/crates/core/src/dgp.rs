//! Count data generating processes and reproducible random number streams.
//!
//! Simulation output is a pure function of the [`RngStream`]: the same
//! `(seed, stream)` pair produces bit-identical series on every run and
//! platform. All integer draws go through exact inverse-transform samplers
//! built from plain arithmetic, so no libm-dependent rejection steps are
//! involved.
//!
//! ```
//! use inar_gof::dgp::{simulate, DgpSpec, InnovationFamily, RngStream};
//!
//! let spec = DgpSpec::inar(InnovationFamily::Poisson { lambda: 1.0 }, vec![0.5])?;
//! let series = simulate(&spec, 200, RngStream::new(7, 0))?;
//! assert_eq!(series.n(), 200);
//! let again = simulate(&spec, 200, RngStream::new(7, 0))?;
//! assert_eq!(series.values(), again.values());
//! # Ok::<(), inar_gof::Error>(())
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::series::{CountSeries, InarModel, Pmf};
use crate::{Error, Result};

/// A named position in the crate-wide random number space.
///
/// `seed` identifies the experiment, `stream` the independent substream
/// within it. Replicates and Monte Carlo samples derive their own streams
/// with [`RngStream::substream`], which is deterministic and does not depend
/// on scheduling or thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> RngStream {
        RngStream { seed, stream }
    }

    /// Derives the `k`-th child stream.
    pub fn substream(&self, k: u64) -> RngStream {
        let mixed = splitmix64(
            self.stream ^ splitmix64(k.wrapping_add(0x9E37_79B9_7F4A_7C15)),
        );
        RngStream { seed: self.seed, stream: mixed }
    }

    pub(crate) fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Binomial thinning `alpha ∘ x`: a Binomial(x, alpha) draw.
///
/// Uses the inverse-transform walk for small `x` and splits larger counts
/// into independent halves, which keeps the draw exact without libm calls.
pub fn binomial_thin<R: Rng>(alpha: f64, x: u32, rng: &mut R) -> u32 {
    debug_assert!((0.0..=1.0).contains(&alpha));
    if alpha <= 0.0 || x == 0 {
        return 0;
    }
    if alpha >= 1.0 {
        return x;
    }
    if x > 64 {
        let half = x / 2;
        return binomial_thin(alpha, half, rng) + binomial_thin(alpha, x - half, rng);
    }
    if alpha > 0.5 {
        return x - binomial_small(1.0 - alpha, x, rng);
    }
    binomial_small(alpha, x, rng)
}

fn binomial_small<R: Rng>(alpha: f64, x: u32, rng: &mut R) -> u32 {
    let mut u: f64 = rng.gen();
    let ratio = alpha / (1.0 - alpha);
    let mut p = (1.0 - alpha).powi(x as i32);
    for k in 0..x {
        if u < p {
            return k;
        }
        u -= p;
        p = p * ratio * (x - k) as f64 / (k + 1) as f64;
    }
    x
}

/// Exact Poisson draw by inverse transform, splitting large means.
pub(crate) fn poisson_draw<R: Rng>(lambda: f64, rng: &mut R) -> u32 {
    debug_assert!(lambda >= 0.0);
    if lambda <= 0.0 {
        return 0;
    }
    if lambda > 30.0 {
        let half = lambda / 2.0;
        return poisson_draw(half, rng) + poisson_draw(lambda - half, rng);
    }
    let mut u: f64 = rng.gen();
    let mut p = (-lambda).exp();
    let cap = (10.0 * lambda) as u32 + 100;
    for k in 0..cap {
        if u < p {
            return k;
        }
        u -= p;
        p = p * lambda / (k + 1) as f64;
    }
    cap
}

/// Draw from a dense pmf by inverse transform.
pub(crate) fn pmf_draw<R: Rng>(pmf: &Pmf, rng: &mut R) -> u32 {
    let mut u: f64 = rng.gen();
    for (k, &m) in pmf.masses().iter().enumerate() {
        if u < m {
            return k as u32;
        }
        u -= m;
    }
    pmf.support_max() as u32
}

/// Parametric innovation families used to build truncated [`Pmf`]s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InnovationFamily {
    Poisson { lambda: f64 },
    /// Number of failures before the `n`-th success, success probability `pi`.
    /// Mean `n (1 - pi) / pi`.
    NegBin { n: f64, pi: f64 },
    /// `NegBin` with `n = 1`: mass `pi (1 - pi)^k`.
    Geometric { pi: f64 },
    PointMass { value: usize },
}

pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Truncates the family to the smallest support `{0..K}` with cumulative
/// mass at least `1 - tail_eps`, then renormalizes.
pub fn make_innovation_pmf(family: InnovationFamily, tail_eps: f64) -> Result<Pmf> {
    if !(tail_eps > 0.0 && tail_eps <= 1e-6) {
        return Err(Error::invalid(format!(
            "tail_eps must lie in (0, 1e-6], got {tail_eps}"
        )));
    }
    let masses = match family {
        InnovationFamily::Poisson { lambda } => {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return Err(Error::invalid(format!("Poisson lambda must be positive, got {lambda}")));
            }
            truncate_by_ratio((-lambda).exp(), |k| lambda / (k + 1) as f64, tail_eps)
        }
        InnovationFamily::NegBin { n, pi } => {
            if !(n > 0.0) || !n.is_finite() {
                return Err(Error::invalid(format!("NegBin n must be positive, got {n}")));
            }
            if !(pi > 0.0 && pi < 1.0) {
                return Err(Error::invalid(format!("NegBin pi must lie in (0, 1), got {pi}")));
            }
            truncate_by_ratio(pi.powf(n), |k| (n + k as f64) * (1.0 - pi) / (k + 1) as f64, tail_eps)
        }
        InnovationFamily::Geometric { pi } => {
            if !(pi > 0.0 && pi < 1.0) {
                return Err(Error::invalid(format!("Geometric pi must lie in (0, 1), got {pi}")));
            }
            truncate_by_ratio(pi, |_| 1.0 - pi, tail_eps)
        }
        InnovationFamily::PointMass { value } => return Ok(Pmf::point_mass(value)),
    };
    Pmf::from_weights(masses)
}

/// Builds masses `p_0, p_0 r(0), ...` until the cumulative reaches
/// `1 - tail_eps`.
fn truncate_by_ratio(p0: f64, ratio: impl Fn(usize) -> f64, tail_eps: f64) -> Vec<f64> {
    let mut masses = vec![p0];
    let mut cum = p0;
    let mut k = 0;
    while cum < 1.0 - tail_eps {
        let next = masses[k] * ratio(k);
        masses.push(next);
        cum += next;
        k += 1;
        if next == 0.0 || k > 100_000 {
            break;
        }
    }
    masses
}

/// A data generating process for count series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DgpVariant {
    /// An INAR(p) null model.
    InarP { model: InarModel },
    /// `X_t | past ~ Poisson(M_t)` with `M_t = beta0 + beta1 M_{t-1} + alpha1 X_{t-1}`.
    Ingarch11 { beta0: f64, beta1: f64, alpha1: f64 },
    /// `X_t | past ~ Poisson(beta + alpha X_{t-1})`.
    Inarch1 { beta: f64, alpha: f64 },
    /// With probability `alpha` repeat `X_{t-1}`, otherwise draw Poisson(lambda).
    PoiDar1 { lambda: f64, alpha: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub variant: DgpVariant,
    /// Pre-sample observations discarded before recording, default 100.
    pub burn_in: usize,
}

pub const DEFAULT_BURN_IN: usize = 100;

impl DgpSpec {
    pub fn new(variant: DgpVariant) -> Result<DgpSpec> {
        let spec = DgpSpec { variant, burn_in: DEFAULT_BURN_IN };
        spec.check()?;
        Ok(spec)
    }

    pub fn with_burn_in(mut self, burn_in: usize) -> DgpSpec {
        self.burn_in = burn_in;
        self
    }

    /// INAR(p) with innovations truncated at the default tail mass.
    pub fn inar(family: InnovationFamily, alphas: Vec<f64>) -> Result<DgpSpec> {
        let innovations = make_innovation_pmf(family, DEFAULT_TAIL_EPS)?;
        DgpSpec::new(DgpVariant::InarP { model: InarModel::new(alphas, innovations)? })
    }

    /// Re-validates parameters, for specs built by deserialization.
    pub fn check(&self) -> Result<()> {
        match &self.variant {
            DgpVariant::InarP { model } => {
                InarModel::new(model.alphas().to_vec(), model.innovations().clone())?;
            }
            DgpVariant::Ingarch11 { beta0, beta1, alpha1 } => {
                if !(*beta0 > 0.0) || *beta1 < 0.0 || *alpha1 < 0.0 || beta1 + alpha1 >= 1.0 {
                    return Err(Error::invalid(format!(
                        "INGARCH(1,1) needs beta0 > 0 and beta1 + alpha1 < 1, got ({beta0}, {beta1}, {alpha1})"
                    )));
                }
            }
            DgpVariant::Inarch1 { beta, alpha } => {
                if !(*beta > 0.0) || !(0.0..1.0).contains(alpha) {
                    return Err(Error::invalid(format!(
                        "INARCH(1) needs beta > 0 and alpha in [0, 1), got ({beta}, {alpha})"
                    )));
                }
            }
            DgpVariant::PoiDar1 { lambda, alpha } => {
                if !(*lambda > 0.0) || !(0.0..1.0).contains(alpha) {
                    return Err(Error::invalid(format!(
                        "Poisson DAR(1) needs lambda > 0 and alpha in [0, 1), got ({lambda}, {alpha})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Unconditional process mean, also the pre-sample initial level.
    pub fn stationary_mean(&self) -> f64 {
        match &self.variant {
            DgpVariant::InarP { model } => model.stationary_mean(),
            DgpVariant::Ingarch11 { beta0, beta1, alpha1 } => beta0 / (1.0 - beta1 - alpha1),
            DgpVariant::Inarch1 { beta, alpha } => beta / (1.0 - alpha),
            DgpVariant::PoiDar1 { lambda, .. } => *lambda,
        }
    }
}

/// Simulates exactly `n` observations after the spec's burn-in.
///
/// Every process starts from its rounded unconditional mean, so short
/// burn-ins are already close to stationarity.
pub fn simulate(spec: &DgpSpec, n: usize, stream: RngStream) -> Result<CountSeries> {
    spec.check()?;
    if n == 0 {
        return Err(Error::invalid("simulation length must be at least 1"));
    }
    let mut rng = stream.rng();
    let init = spec.stationary_mean().round() as u32;
    let values = match &spec.variant {
        DgpVariant::InarP { model } => inar_path(model, n, spec.burn_in, init, &mut rng),
        DgpVariant::Ingarch11 { beta0, beta1, alpha1 } => {
            let mut m = spec.stationary_mean();
            let mut out = Vec::with_capacity(n);
            for t in 0..spec.burn_in + n {
                let x = poisson_draw(m, &mut rng);
                if t >= spec.burn_in {
                    out.push(x);
                }
                m = beta0 + beta1 * m + alpha1 * x as f64;
            }
            out
        }
        DgpVariant::Inarch1 { beta, alpha } => {
            let mut prev = init;
            let mut out = Vec::with_capacity(n);
            for t in 0..spec.burn_in + n {
                let x = poisson_draw(beta + alpha * prev as f64, &mut rng);
                if t >= spec.burn_in {
                    out.push(x);
                }
                prev = x;
            }
            out
        }
        DgpVariant::PoiDar1 { lambda, alpha } => {
            let mut prev = init;
            let mut out = Vec::with_capacity(n);
            for t in 0..spec.burn_in + n {
                let u: f64 = rng.gen();
                let x = if u < *alpha { prev } else { poisson_draw(*lambda, &mut rng) };
                if t >= spec.burn_in {
                    out.push(x);
                }
                prev = x;
            }
            out
        }
    };
    CountSeries::from_counts(values)
}

/// INAR(p) sample path from explicit pre-sample values, used both by
/// [`simulate`] and by the bootstrap, which restarts from the observed mean.
pub(crate) fn inar_path<R: Rng>(
    model: &InarModel,
    n: usize,
    burn_in: usize,
    init: u32,
    rng: &mut R,
) -> Vec<u32> {
    let p = model.order();
    let alphas = model.alphas();
    // recent[0] is X_{t-1}, recent[p-1] is X_{t-p}
    let mut recent = vec![init; p];
    let mut out = Vec::with_capacity(n);
    for t in 0..burn_in + n {
        let mut x = pmf_draw(model.innovations(), rng);
        for (j, &alpha) in alphas.iter().enumerate() {
            x += binomial_thin(alpha, recent[j], rng);
        }
        if t >= burn_in {
            out.push(x);
        }
        recent.rotate_right(1);
        recent[0] = x;
    }
    out
}

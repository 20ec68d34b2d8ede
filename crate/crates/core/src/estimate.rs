//! Semi-parametric conditional maximum likelihood for INAR(p).
//!
//! The estimator treats the thinning coefficients `alpha` and the full
//! innovation distribution `G` (a pmf on `{0..max(X)}`) as free parameters
//! and maximizes the conditional likelihood of `X_{p+1}, ..., X_n` given the
//! first `p` observations. The transition probability is the convolution of
//! `p` binomial thinnings with `G`:
//!
//! ```text
//! P(X_t = x | past) = (Bin(X_{t-1}, a_1) * ... * Bin(X_{t-p}, a_p) * G)(x)
//! ```
//!
//! Optimization alternates one EM update of `G` (closed form) with one
//! projected Newton step on `alpha` (exact gradient, finite-difference
//! Hessian, backtracking line search), so the conditional loglikelihood
//! never decreases.
//!
//! ```
//! use inar_gof::dgp::{simulate, DgpSpec, InnovationFamily, RngStream};
//! use inar_gof::estimate::{fit_semiparametric, FitOptions};
//!
//! let spec = DgpSpec::inar(InnovationFamily::Poisson { lambda: 1.0 }, vec![0.5])?;
//! let series = simulate(&spec, 2000, RngStream::new(11, 0))?;
//! let fit = fit_semiparametric(&series, 1, FitOptions::default())?;
//! assert!((fit.model.alphas()[0] - 0.5).abs() < 0.1);
//! assert!((fit.model.innovations().mean() - 1.0).abs() < 0.2);
//! # Ok::<(), inar_gof::Error>(())
//! ```

use std::collections::BTreeMap;

use serde::Serialize;

use crate::convolve::{convolve, thinning_pmf};
use crate::series::{levinson, sample_acf, CountSeries, InarModel, Pmf};
use crate::sum::Kahan;
use crate::{Error, Result};

const ALPHA_MIN: f64 = 1e-6;
const ALPHA_MAX: f64 = 1.0 - 1e-6;
const ALPHA_SUM_MAX: f64 = 1.0 - 1e-6;
const LOG_FLOOR: f64 = 1e-300;

/// `P(X_t = next | X_{t-1}, ..., X_{t-p} = lags)` under `model`.
///
/// `lags[0]` is the most recent observation `X_{t-1}`.
pub fn transition_probability(model: &InarModel, lags: &[u32], next: u32) -> Result<f64> {
    if lags.len() != model.order() {
        return Err(Error::invalid(format!(
            "expected {} lagged values, got {}",
            model.order(),
            lags.len()
        )));
    }
    let thin = thinning_pmf(model.alphas(), lags);
    let g = model.innovations();
    let next = next as usize;
    let mut p = 0.0;
    let lo = next.saturating_sub(g.support_max());
    for m in lo..thin.len().min(next + 1) {
        p += thin[m] * g.mass(next - m);
    }
    Ok(p)
}

/// Conditional loglikelihood of the transitions `t = p+1, ..., n`.
///
/// Fails with [`Error::ZeroLikelihood`] carrying the first 1-based time
/// index whose transition has probability zero.
pub fn conditional_loglik(model: &InarModel, series: &CountSeries) -> Result<f64> {
    let p = model.order();
    let x = series.values();
    if series.n() <= p {
        return Err(Error::invalid(format!(
            "need more than p = {p} observations, got {}",
            series.n()
        )));
    }
    let mut ll = Kahan::default();
    let mut lags = vec![0u32; p];
    for t in p..series.n() {
        for j in 0..p {
            lags[j] = x[t - 1 - j];
        }
        let prob = transition_probability(model, &lags, x[t])?;
        if prob <= 0.0 {
            return Err(Error::ZeroLikelihood { t: t + 1 });
        }
        ll.add(prob.ln());
    }
    Ok(ll.value())
}

/// Options for [`fit_semiparametric`].
#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    /// Stop when one full cycle improves the loglikelihood by less than this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> FitOptions {
        FitOptions { tol: 1e-8, max_iter: 500 }
    }
}

/// Result of a semi-parametric fit.
#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub model: InarModel,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Constant input: the fit is exact but carries no information.
    pub degenerate: bool,
    /// Some coefficient ended on the clamp boundary.
    pub boundary: bool,
    /// Loglikelihood after each alternation cycle, non-decreasing.
    #[serde(skip)]
    pub loglik_trace: Vec<f64>,
}

/// Moment-based starting point: Yule-Walker coefficients clamped to
/// `[0.01, 0.95]` (rescaled to sum 0.95 if they add up to 0.99 or more) and
/// the empirical pmf of the non-negative residual proxy
/// `max(X_t - round(sum_j a_j X_{t-j}), 0)` as innovation distribution.
pub fn yule_walker_init(series: &CountSeries, p: usize) -> Result<InarModel> {
    if p == 0 {
        return Err(Error::invalid("order must be at least 1"));
    }
    if series.n() <= p + 1 {
        return Err(Error::invalid(format!(
            "need at least p + 2 = {} observations, got {}",
            p + 2,
            series.n()
        )));
    }
    let acf = sample_acf(series, p)?;
    let (_, phi) = levinson(&acf)?;
    let mut alphas: Vec<f64> = phi.iter().map(|a| a.clamp(0.01, 0.95)).collect();
    let sum: f64 = alphas.iter().sum();
    if sum >= 0.99 {
        for a in &mut alphas {
            *a *= 0.95 / sum;
        }
    }
    let x = series.values();
    let max_x = series.max() as usize;
    let mut counts = vec![0.0; max_x + 1];
    for t in p..series.n() {
        let pred: f64 = alphas.iter().enumerate().map(|(j, a)| a * x[t - 1 - j] as f64).sum();
        let resid = (x[t] as f64 - pred.round()).max(0.0) as usize;
        counts[resid.min(max_x)] += 1.0;
    }
    InarModel::new(alphas, Pmf::from_weights(counts)?)
}

/// Fits an INAR(p) model by semi-parametric conditional maximum likelihood.
///
/// A constant series is a degenerate boundary case: the exact maximizer is
/// `alpha = 0` with a point-mass innovation distribution, returned with the
/// `degenerate` flag set.
pub fn fit_semiparametric(series: &CountSeries, p: usize, opts: FitOptions) -> Result<FitResult> {
    if p == 0 {
        return Err(Error::invalid("order must be at least 1"));
    }
    if series.n() <= p + 1 {
        return Err(Error::invalid(format!(
            "need at least p + 2 = {} observations, got {}",
            p + 2,
            series.n()
        )));
    }
    if series.is_constant() {
        let value = series.values()[0] as usize;
        let model = InarModel::new(vec![0.0; p], Pmf::point_mass(value))?;
        return Ok(FitResult {
            model,
            loglik: 0.0,
            iterations: 0,
            converged: true,
            degenerate: true,
            boundary: false,
            loglik_trace: vec![0.0],
        });
    }

    let grouped = Grouped::build(series, p);
    let init = yule_walker_init(series, p).unwrap_or_else(|_| fallback_init(series, p));
    let raw_loglik = conditional_loglik(&init, series).unwrap_or(f64::NEG_INFINITY);

    // Mix a little uniform mass into the starting pmf so EM cannot freeze a
    // cell at zero that the data later needs.
    let mut g0 = vec![0.0; grouped.max_x + 1];
    for (e, slot) in g0.iter_mut().enumerate() {
        *slot = 0.999 * init.innovations().mass(e) + 0.001 / (grouped.max_x + 1) as f64;
    }
    let mut state = optimize(&grouped, init.alphas().to_vec(), g0, opts);

    // The smoothing can in principle start below the unsmoothed initializer;
    // restart from it in that case so the fit never undercuts it.
    if state.loglik < raw_loglik {
        let g_raw: Vec<f64> =
            (0..=grouped.max_x).map(|e| init.innovations().mass(e)).collect();
        let retry = optimize(&grouped, init.alphas().to_vec(), g_raw, opts);
        if retry.loglik > state.loglik {
            state = retry;
        }
    }

    let boundary = state.alphas.iter().any(|&a| a <= ALPHA_MIN || a >= ALPHA_MAX)
        || state.alphas.iter().sum::<f64>() >= ALPHA_SUM_MAX;
    let model = InarModel::new(state.alphas, Pmf::from_weights(state.g)?)?;
    Ok(FitResult {
        model,
        loglik: state.loglik,
        iterations: state.iterations,
        converged: state.converged,
        degenerate: false,
        boundary,
        loglik_trace: state.trace,
    })
}

fn fallback_init(series: &CountSeries, p: usize) -> InarModel {
    let max_x = series.max() as usize;
    let mut counts = vec![0.0; max_x + 1];
    for &x in series.values() {
        counts[x as usize] += 1.0;
    }
    let pmf = Pmf::from_weights(counts).expect("series is non-empty");
    InarModel::new(vec![0.1 / p as f64; p], pmf).expect("alphas are interior")
}

struct OptState {
    alphas: Vec<f64>,
    g: Vec<f64>,
    loglik: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

fn optimize(grouped: &Grouped, mut alphas: Vec<f64>, mut g: Vec<f64>, opts: FitOptions) -> OptState {
    let mut loglik = grouped.loglik(&alphas, &g);
    let mut trace = vec![loglik];
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..opts.max_iter {
        iterations += 1;
        g = grouped.em_step(&alphas, &g);
        alphas = grouped.newton_step(alphas, &g);
        let next = grouped.loglik(&alphas, &g);
        trace.push(next);
        let gain = next - loglik;
        loglik = next;
        if gain.abs() < opts.tol {
            converged = true;
            break;
        }
    }
    OptState { alphas, g, loglik, iterations, converged, trace }
}

/// Transitions grouped by distinct lag vector, with per-target counts.
/// Grouping uses ordered maps so the accumulation order is deterministic.
struct Grouped {
    lag_vecs: Vec<Vec<u32>>,
    targets: Vec<Vec<(u32, f64)>>,
    n_trans: f64,
    max_x: usize,
}

impl Grouped {
    fn build(series: &CountSeries, p: usize) -> Grouped {
        let x = series.values();
        let mut map: BTreeMap<Vec<u32>, BTreeMap<u32, f64>> = BTreeMap::new();
        for t in p..x.len() {
            let mut lags = Vec::with_capacity(p);
            for j in 0..p {
                lags.push(x[t - 1 - j]);
            }
            *map.entry(lags).or_default().entry(x[t]).or_insert(0.0) += 1.0;
        }
        let mut lag_vecs = Vec::with_capacity(map.len());
        let mut targets = Vec::with_capacity(map.len());
        for (lags, inner) in map {
            lag_vecs.push(lags);
            targets.push(inner.into_iter().collect());
        }
        Grouped {
            lag_vecs,
            targets,
            n_trans: (x.len() - p) as f64,
            max_x: series.max() as usize,
        }
    }

    fn loglik(&self, alphas: &[f64], g: &[f64]) -> f64 {
        let mut ll = Kahan::default();
        for (lags, targets) in self.lag_vecs.iter().zip(&self.targets) {
            let probs = convolve(&thinning_pmf(alphas, lags), g);
            for &(x, cnt) in targets {
                let p = probs.get(x as usize).copied().unwrap_or(0.0);
                ll.add(cnt * p.max(LOG_FLOOR).ln());
            }
        }
        ll.value()
    }

    /// One EM update of `g` at fixed `alphas`. The posterior over the
    /// innovation value given each transition is averaged across transitions.
    fn em_step(&self, alphas: &[f64], g: &[f64]) -> Vec<f64> {
        let mut numer = vec![0.0; g.len()];
        for (lags, targets) in self.lag_vecs.iter().zip(&self.targets) {
            let thin = thinning_pmf(alphas, lags);
            let probs = convolve(&thin, g);
            for &(x, cnt) in targets {
                let x = x as usize;
                let total = probs.get(x).copied().unwrap_or(0.0);
                if total <= 0.0 {
                    continue;
                }
                let lo = x.saturating_sub(thin.len() - 1);
                for e in lo..g.len().min(x + 1) {
                    let w = g[e] * thin[x - e];
                    if w > 0.0 {
                        numer[e] += cnt * w / total;
                    }
                }
            }
        }
        for v in &mut numer {
            *v /= self.n_trans;
        }
        numer
    }

    /// Exact gradient of the conditional loglikelihood in `alphas`, using
    /// `d Bin(m, a) / d a = m Bin(m-1, a) * (delta_1 - delta_0)`.
    fn grad(&self, alphas: &[f64], g: &[f64]) -> Vec<f64> {
        let p = alphas.len();
        let mut grad = vec![0.0; p];
        let mut reduced = vec![0u32; p];
        for (lags, targets) in self.lag_vecs.iter().zip(&self.targets) {
            let probs = convolve(&thinning_pmf(alphas, lags), g);
            for j in 0..p {
                if lags[j] == 0 {
                    continue;
                }
                reduced.copy_from_slice(lags);
                reduced[j] -= 1;
                let partial = convolve(&thinning_pmf(alphas, &reduced), g);
                let m = lags[j] as f64;
                for &(x, cnt) in targets {
                    let x = x as usize;
                    let total = probs.get(x).copied().unwrap_or(0.0);
                    if total <= 0.0 {
                        continue;
                    }
                    let at = |k: usize| partial.get(k).copied().unwrap_or(0.0);
                    let lower = if x == 0 { 0.0 } else { at(x - 1) };
                    grad[j] += cnt * m * (lower - at(x)) / total;
                }
            }
        }
        grad
    }

    /// One projected Newton step with backtracking; never decreases the
    /// loglikelihood (the current point is kept when no step improves it).
    fn newton_step(&self, alphas: Vec<f64>, g: &[f64]) -> Vec<f64> {
        let p = alphas.len();
        let base_ll = self.loglik(&alphas, g);
        let grad = self.grad(&alphas, g);
        if grad.iter().all(|d| d.abs() < 1e-12) {
            return alphas;
        }
        let hess = self.fd_hessian(&alphas, g);
        let mut dir = solve_newton(&hess, &grad);
        let ascent = dir
            .as_ref()
            .map(|d| d.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>() > 0.0)
            .unwrap_or(false);
        if !ascent {
            dir = Some(grad.clone());
        }
        let dir = dir.unwrap();

        let mut tau = 1.0;
        for _ in 0..40 {
            let mut cand: Vec<f64> = (0..p).map(|j| alphas[j] + tau * dir[j]).collect();
            project(&mut cand);
            if self.loglik(&cand, g) > base_ll {
                return cand;
            }
            tau *= 0.5;
        }
        alphas
    }

    /// Central-difference Hessian of the loglikelihood from exact gradients.
    fn fd_hessian(&self, alphas: &[f64], g: &[f64]) -> Vec<Vec<f64>> {
        let p = alphas.len();
        let h = 1e-5_f64;
        let mut hess = vec![vec![0.0; p]; p];
        let mut work = alphas.to_vec();
        for j in 0..p {
            let step = h.min((alphas[j] - ALPHA_MIN).max(1e-8)).min((ALPHA_MAX - alphas[j]).max(1e-8));
            work[j] = alphas[j] + step;
            let up = self.grad(&work, g);
            work[j] = alphas[j] - step;
            let down = self.grad(&work, g);
            work[j] = alphas[j];
            for i in 0..p {
                hess[i][j] = (up[i] - down[i]) / (2.0 * step);
            }
        }
        for i in 0..p {
            for j in 0..i {
                let s = 0.5 * (hess[i][j] + hess[j][i]);
                hess[i][j] = s;
                hess[j][i] = s;
            }
        }
        hess
    }
}

/// Clamp into the box and pull back inside the simplex `sum a <= 1 - 1e-6`.
fn project(alphas: &mut [f64]) {
    for _ in 0..3 {
        for a in alphas.iter_mut() {
            *a = a.clamp(ALPHA_MIN, ALPHA_MAX);
        }
        let sum: f64 = alphas.iter().sum();
        if sum <= ALPHA_SUM_MAX {
            return;
        }
        let scale = ALPHA_SUM_MAX / sum;
        for a in alphas.iter_mut() {
            *a *= scale;
        }
    }
    for a in alphas.iter_mut() {
        *a = a.clamp(ALPHA_MIN, ALPHA_MAX);
    }
}

/// Newton direction `-H^{-1} grad` by Gaussian elimination with partial
/// pivoting; `None` when `H` is numerically singular.
fn solve_newton(hess: &[Vec<f64>], grad: &[f64]) -> Option<Vec<f64>> {
    let p = grad.len();
    let mut a: Vec<Vec<f64>> = hess.to_vec();
    let mut b: Vec<f64> = grad.iter().map(|v| -v).collect();
    for col in 0..p {
        let pivot = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..p {
            let f = a[row][col] / a[col][col];
            for k in col..p {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; p];
    for col in (0..p).rev() {
        let mut v = b[col];
        for k in col + 1..p {
            v -= a[col][k] * x[k];
        }
        x[col] = v / a[col][col];
    }
    Some(x)
}

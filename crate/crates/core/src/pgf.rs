//! Joint probability generating function estimators.
//!
//! For a stationary count process the joint pgf of `(X_t, ..., X_{t-s})` is
//! `g_s(u) = E(u_0^{X_t} ... u_s^{X_{t-s}})` on the cube `[0,1]^{s+1}`. Under
//! an INAR(p) null with `s >= p` it factorizes through the thinning: writing
//! `v_j = u_j (1 + a_j (u_0 - 1))` with `a_j = 0` for `j > p`,
//!
//! ```text
//! g_s(u) = g_e(u_0) * E(v_1^{X_{t-1}} ... v_s^{X_{t-s}})
//! ```
//!
//! where `g_e` is the innovation pgf. [`null_joint_pgf`] plugs estimated
//! quantities into the right-hand side while [`empirical_joint_pgf`]
//! estimates the left-hand side directly; the goodness-of-fit statistic
//! measures their weighted distance. Throughout, `0^0 = 1`.
//!
//! ```
//! use inar_gof::pgf::{empirical_joint_pgf, PgfPoint};
//! use inar_gof::series::CountSeries;
//!
//! let series = CountSeries::from_counts(vec![1, 0, 2, 1, 1, 0])?;
//! let ones = PgfPoint::new(vec![1.0, 1.0])?;
//! assert!((empirical_joint_pgf(&series, 1, &ones)? - 1.0).abs() < 1e-12);
//! # Ok::<(), inar_gof::Error>(())
//! ```

use crate::series::{CountSeries, InarModel, Pmf};
use crate::{Error, Result};

/// A point of the unit cube `[0,1]^{s+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PgfPoint {
    coords: Vec<f64>,
}

impl PgfPoint {
    pub fn new(coords: Vec<f64>) -> Result<PgfPoint> {
        if coords.is_empty() {
            return Err(Error::invalid("pgf point needs at least one coordinate"));
        }
        for (j, &u) in coords.iter().enumerate() {
            if !(0.0..=1.0).contains(&u) {
                return Err(Error::invalid(format!("coordinate {j} is {u}, outside [0, 1]")));
            }
        }
        Ok(PgfPoint { coords })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Dimension `s + 1`.
    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// Weight density `w(u; a) = (a+1)^{s+1} prod_j u_j^a`, which integrates to
/// one over the cube for any `a >= 0`.
pub fn weight(u: &PgfPoint, a: f64) -> Result<f64> {
    if !(a >= 0.0) {
        return Err(Error::invalid(format!("weight exponent must be >= 0, got {a}")));
    }
    let mut w = 1.0;
    for &uj in u.coords() {
        w *= (a + 1.0) * uj.powf(a);
    }
    Ok(w)
}

/// Pgf of a finite pmf, evaluated by Horner's rule.
pub fn innovation_pgf(pmf: &Pmf, u0: f64) -> f64 {
    let masses = pmf.masses();
    let mut acc = 0.0;
    for &m in masses.iter().rev() {
        acc = acc * u0 + m;
    }
    acc
}

/// Empirical joint pgf `(n-s)^{-1} sum_t prod_j u_j^{X_{t-j}}`.
pub fn empirical_joint_pgf(series: &CountSeries, s: usize, u: &PgfPoint) -> Result<f64> {
    check_window(series, s, u)?;
    let x = series.values();
    let coords = u.coords();
    let mut total = 0.0;
    for t in s..x.len() {
        let mut term = 1.0;
        for (j, &uj) in coords.iter().enumerate() {
            term *= uj.powi(x[t - j] as i32);
        }
        total += term;
    }
    Ok(total / (x.len() - s) as f64)
}

/// Null-implied joint pgf with estimated quantities plugged in:
/// `g_e(u_0) * (n-s)^{-1} sum_t prod_{j=1}^s v_j^{X_{t-j}}` with
/// `v_j = u_j (1 + a_j (u_0 - 1))` and `a_j = 0` beyond the model order.
pub fn null_joint_pgf(
    model: &InarModel,
    series: &CountSeries,
    s: usize,
    u: &PgfPoint,
) -> Result<f64> {
    check_window(series, s, u)?;
    if s < model.order() {
        return Err(Error::invalid(format!(
            "statistic order s = {s} must be at least the model order p = {}",
            model.order()
        )));
    }
    let x = series.values();
    let coords = u.coords();
    let u0 = coords[0];
    let alphas = model.alphas();
    let v: Vec<f64> = (1..=s)
        .map(|j| {
            let alpha = alphas.get(j - 1).copied().unwrap_or(0.0);
            coords[j] * (1.0 + alpha * (u0 - 1.0))
        })
        .collect();
    let mut total = 0.0;
    for t in s..x.len() {
        let mut term = 1.0;
        for (j, &vj) in v.iter().enumerate() {
            term *= vj.powi(x[t - 1 - j] as i32);
        }
        total += term;
    }
    Ok(innovation_pgf(model.innovations(), u0) * total / (x.len() - s) as f64)
}

/// Exact joint pgf of an INAR model given an oracle for the joint pgf of the
/// lag vector `(X_{t-1}, ..., X_{t-s})`, for validating estimators against
/// models whose stationary law is known.
pub fn analytic_inar_pgf<F>(model: &InarModel, lag_pgf: F, u: &PgfPoint) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    if u.dim() < 2 {
        return Err(Error::invalid("need at least one lag coordinate"));
    }
    let coords = u.coords();
    let u0 = coords[0];
    let alphas = model.alphas();
    let v: Vec<f64> = coords[1..]
        .iter()
        .enumerate()
        .map(|(j, &uj)| uj * (1.0 + alphas.get(j).copied().unwrap_or(0.0) * (u0 - 1.0)))
        .collect();
    Ok(innovation_pgf(model.innovations(), u0) * lag_pgf(&v))
}

fn check_window(series: &CountSeries, s: usize, u: &PgfPoint) -> Result<()> {
    if s == 0 {
        return Err(Error::invalid("statistic order s must be at least 1"));
    }
    if u.dim() != s + 1 {
        return Err(Error::invalid(format!(
            "point dimension {} does not match s + 1 = {}",
            u.dim(),
            s + 1
        )));
    }
    if series.n() <= s {
        return Err(Error::invalid(format!(
            "need more than s = {s} observations, got {}",
            series.n()
        )));
    }
    Ok(())
}

/// One cell of the discrepancy surface written by the heatmap command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub u0: f64,
    pub u1: f64,
    /// `(null pgf - empirical pgf)^2 * w(u; a)` at `(u0, u1)`.
    pub value: f64,
}

/// Evaluates the weighted squared pgf discrepancy for a fitted INAR(1) model
/// on a `k x k` lattice of `[0,1]^2`, row-major in `u0` then `u1`.
pub fn discrepancy_grid(
    series: &CountSeries,
    model: &InarModel,
    a: f64,
    k: usize,
) -> Result<Vec<GridCell>> {
    if model.order() != 1 {
        return Err(Error::invalid(
            "the discrepancy surface is two-dimensional, which requires a model of order 1",
        ));
    }
    if k < 2 {
        return Err(Error::invalid("grid needs at least 2 points per axis"));
    }
    let mut cells = Vec::with_capacity(k * k);
    for i in 0..k {
        let u0 = i as f64 / (k - 1) as f64;
        for j in 0..k {
            let u1 = j as f64 / (k - 1) as f64;
            let point = PgfPoint::new(vec![u0, u1])?;
            let diff = null_joint_pgf(model, series, 1, &point)?
                - empirical_joint_pgf(series, 1, &point)?;
            cells.push(GridCell { u0, u1, value: diff * diff * weight(&point, a)? });
        }
    }
    Ok(cells)
}

//! Goodness-of-fit testing for INAR(p) count time series.
//!
//! An INAR(p) process generates counts through binomial thinning of its own
//! past plus an independent innovation term:
//!
//! ```text
//! X_t = a_1 ∘ X_{t-1} + ... + a_p ∘ X_{t-p} + e_t
//! ```
//!
//! where `a ∘ X` is a sum of `X` independent Bernoulli(`a`) draws and the
//! innovations `e_t` are i.i.d. on the non-negative integers with an
//! unspecified distribution `G`. This crate tests whether an observed count
//! series is compatible with that class without assuming a parametric family
//! for `G`:
//!
//! * [`estimate`] fits the thinning coefficients and a discrete innovation
//!   distribution by conditional maximum likelihood,
//! * [`pgf`] evaluates empirical and null-implied joint probability
//!   generating functions,
//! * [`gof`] turns their weighted L2 distance into the test statistic,
//!   either by closed form or by Gauss-Legendre quadrature,
//! * [`bootstrap`] calibrates the statistic with a semi-parametric INAR
//!   bootstrap and exposes a warp-speed Monte Carlo variant,
//! * [`dgp`] simulates INAR and non-INAR count processes for power studies,
//! * [`harness`] runs whole simulation tables and writes them as CSV.
//!
//! A complete test of an observed series:
//!
//! ```
//! use inar_gof::bootstrap::gof_test;
//! use inar_gof::dgp::RngStream;
//! use inar_gof::gof::StatConfig;
//! use inar_gof::series::CountSeries;
//!
//! let counts = vec![2, 1, 0, 1, 3, 1, 0, 0, 1, 2, 1, 1, 0, 2, 4, 2, 1, 0, 1, 1];
//! let series = CountSeries::from_counts(counts)?;
//! let cfg = StatConfig::closed_form(1, 5.0)?;
//! let result = gof_test(&series, 1, &cfg, 200, 100, RngStream::new(7, 0))?;
//! assert!(result.p_value > 0.0 && result.p_value <= 1.0);
//! # Ok::<(), inar_gof::Error>(())
//! ```

pub mod bootstrap;
mod convolve;
pub mod dgp;
pub mod estimate;
pub mod gof;
pub mod harness;
pub mod pgf;
pub mod series;
mod sum;

pub use bootstrap::{gof_test, GofResult};
pub use dgp::{DgpSpec, InnovationFamily, RngStream};
pub use estimate::{fit_semiparametric, FitOptions, FitResult};
pub use gof::{tn, Method, StatConfig};
pub use series::{CountSeries, InarModel, Pmf};

/// Errors shared across the crate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("input series is empty")]
    EmptyInput,
    #[error("negative value at index {index}")]
    NegativeValue { index: usize },
    #[error("non-integer value at index {index}")]
    NonIntegerValue { index: usize },
    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("zero transition probability at t = {t}")]
    ZeroLikelihood { t: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
    #[error("closed form requires an integer weight exponent, got a = {a}")]
    NonIntegerWeight { a: f64 },
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    fn invalid(msg: impl Into<String>) -> Error {
        Error::InvalidParameter(msg.into())
    }
}

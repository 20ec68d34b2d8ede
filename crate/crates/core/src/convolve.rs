//! Dense convolutions of small discrete distributions.
//!
//! Everything here works on plain `Vec<f64>` mass vectors indexed from zero.
//! These are the building blocks for INAR transition probabilities and for
//! the thinning polynomials of the closed-form statistic.

/// Mass vector of Binomial(m, alpha), length `m + 1`.
///
/// Computed by the upward ratio recursion from the mode-free end, with the
/// complement taken for `alpha > 1/2` so the ratio stays below one.
pub(crate) fn binomial_pmf(m: u32, alpha: f64) -> Vec<f64> {
    debug_assert!((0.0..=1.0).contains(&alpha));
    if m == 0 {
        return vec![1.0];
    }
    if alpha <= 0.0 {
        let mut p = vec![0.0; m as usize + 1];
        p[0] = 1.0;
        return p;
    }
    if alpha >= 1.0 {
        let mut p = vec![0.0; m as usize + 1];
        p[m as usize] = 1.0;
        return p;
    }
    if alpha > 0.5 {
        let mut p = binomial_pmf(m, 1.0 - alpha);
        p.reverse();
        return p;
    }
    let m = m as usize;
    let mut p = vec![0.0; m + 1];
    let ratio = alpha / (1.0 - alpha);
    p[0] = (1.0 - alpha).powi(m as i32);
    for k in 0..m {
        p[k + 1] = p[k] * ratio * (m - k) as f64 / (k + 1) as f64;
    }
    p
}

/// Convolution of two mass vectors.
pub(crate) fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// Mass vector of `sum_j Binomial(lags[j], alphas[j])`, the distribution of
/// the total thinning contribution given the lagged counts.
///
/// `lags` may be longer than `alphas`; missing coefficients count as zero
/// and contribute a point mass at the origin, so they are skipped.
pub(crate) fn thinning_pmf(alphas: &[f64], lags: &[u32]) -> Vec<f64> {
    let mut out = vec![1.0];
    for (j, &x) in lags.iter().enumerate() {
        let alpha = alphas.get(j).copied().unwrap_or(0.0);
        if alpha == 0.0 || x == 0 {
            continue;
        }
        out = convolve(&out, &binomial_pmf(x, alpha));
    }
    out
}

//! Statistical behavior checks that go beyond exact invariants: estimator
//! consistency in the large-sample limit, calibration of the bootstrap
//! p-value under the null, and sanity of power against a gross alternative.
//! Tolerances are Monte Carlo bounds, generous enough to be stable across
//! seeds yet tight enough to catch systematic bias.

use inar_gof::bootstrap::{gof_test, warp_speed_experiment};
use inar_gof::dgp::{simulate, DgpSpec, DgpVariant, InnovationFamily, RngStream};
use inar_gof::gof::StatConfig;
use inar_gof::pgf::{empirical_joint_pgf, innovation_pgf, null_joint_pgf, PgfPoint};
use inar_gof::series::InarModel;
use inar_gof::Pmf;

/// With the true parameters plugged in, the structured pgf estimator and the
/// unrestricted one estimate the same functional under the null, so they
/// must agree up to sampling noise on a long path.
#[test]
fn plug_in_and_empirical_pgf_agree_under_the_null() {
    let alpha = 0.4;
    let lambda = 1.2;
    let spec = DgpSpec::inar(InnovationFamily::Poisson { lambda }, vec![alpha]).unwrap();
    let series = simulate(&spec, 100_000, RngStream::new(41, 0)).unwrap();
    let model = spec_model(&spec);

    for (u0, u1) in [(0.0, 0.0), (0.3, 0.8), (0.5, 0.5), (0.9, 0.2), (1.0, 0.7)] {
        let u = PgfPoint::new(vec![u0, u1]).unwrap();
        let emp = empirical_joint_pgf(&series, 1, &u).unwrap();
        let nul = null_joint_pgf(&model, &series, 1, &u).unwrap();
        assert!(
            (emp - nul).abs() < 0.01,
            "at ({u0}, {u1}): empirical {emp:.5} vs plug-in {nul:.5}"
        );
    }
}

/// For a Poisson INAR(1) the stationary joint pgf has a closed form:
/// g(u0, u1) = g_eps(u0) exp(mu (u1 (1 + alpha (u0 - 1)) - 1)) with
/// mu = lambda / (1 - alpha). The empirical estimator must converge to it.
#[test]
fn empirical_pgf_converges_to_the_analytic_stationary_form() {
    let alpha = 0.5;
    let lambda = 1.0;
    let mu = lambda / (1.0 - alpha);
    let spec = DgpSpec::inar(InnovationFamily::Poisson { lambda }, vec![alpha]).unwrap();
    let series = simulate(&spec, 1_000_000, RngStream::new(42, 0)).unwrap();
    let g_eps = make_poisson_pmf(lambda);

    for (u0, u1) in [(0.2, 0.9), (0.5, 0.5), (0.8, 0.1), (0.95, 0.95)] {
        let analytic =
            innovation_pgf(&g_eps, u0) * (mu * (u1 * (1.0 + alpha * (u0 - 1.0)) - 1.0)).exp();
        let u = PgfPoint::new(vec![u0, u1]).unwrap();
        let emp = empirical_joint_pgf(&series, 1, &u).unwrap();
        // Terms are bounded by 1, so even with serial dependence the mean of
        // a million of them is well inside 0.005 of its expectation.
        assert!(
            (emp - analytic).abs() < 0.005,
            "at ({u0}, {u1}): empirical {emp:.6} vs analytic {analytic:.6}"
        );
    }
}

/// Under the null the bootstrap p-value should be close to uniform. Too many
/// small p-values would make the test anti-conservative, so bound the
/// one-sided Kolmogorov-Smirnov excess of the empirical cdf over the uniform
/// at the 1% critical value.
#[test]
fn bootstrap_p_values_are_not_anti_conservative_under_the_null() {
    let m = 400;
    let b = 99;
    let spec = DgpSpec::inar(InnovationFamily::Poisson { lambda: 1.0 }, vec![0.5]).unwrap();
    let cfg = StatConfig::closed_form(1, 2.0).unwrap();
    let seed = RngStream::new(43, 0);

    let mut p_values = Vec::with_capacity(m);
    for i in 0..m {
        let series = simulate(&spec, 100, seed.substream(2 * i as u64)).unwrap();
        let res = gof_test(&series, 1, &cfg, b, 100, seed.substream(2 * i as u64 + 1)).unwrap();
        p_values.push(res.p_value);
    }
    p_values.sort_by(f64::total_cmp);

    let mut d_plus: f64 = 0.0;
    for (i, p) in p_values.iter().enumerate() {
        d_plus = d_plus.max((i + 1) as f64 / m as f64 - p);
    }
    // One-sided KS critical value at level 0.01: sqrt(ln(1/0.01) / (2 m)).
    let crit = ((1.0f64 / 0.01).ln() / (2.0 * m as f64)).sqrt();
    assert!(
        d_plus < crit,
        "one-sided KS excess {d_plus:.4} exceeds the 1% critical value {crit:.4}"
    );
}

/// Warp-speed rejection rates under the null should track the nominal level
/// across a grid of levels, within three binomial standard errors.
#[test]
fn warp_speed_size_tracks_the_nominal_level() {
    let spec = DgpSpec::inar(InnovationFamily::Poisson { lambda: 1.0 }, vec![0.3]).unwrap();
    let cfg = StatConfig::closed_form(1, 2.0).unwrap();
    let run = warp_speed_experiment(&spec, 100, 1, &cfg, 500, 100, RngStream::new(44, 0)).unwrap();
    for gamma in [0.01, 0.05, 0.10, 0.25] {
        let rate = run.rejection_rate(gamma).unwrap();
        let tol = 3.0 * (gamma * (1.0 - gamma) / 500.0f64).sqrt() + 0.5 / 500.0;
        assert!(
            (rate - gamma).abs() <= tol,
            "level {gamma}: rejection rate {rate:.3} departs by more than {tol:.3}"
        );
    }
}

/// An alternative far from any INAR law should be rejected at moderate
/// sample size. Power is below one even here, so check several independent
/// series rather than staking the test on a single draw.
#[test]
fn gross_alternative_is_rejected() {
    let spec = DgpSpec::new(DgpVariant::PoiDar1 { lambda: 6.0, alpha: 0.75 }).unwrap();
    let cfg = StatConfig::closed_form(1, 2.0).unwrap();
    let seed = RngStream::new(45, 0);
    let mut rejected = 0;
    for i in 0..4u64 {
        let series = simulate(&spec, 400, seed.substream(2 * i)).unwrap();
        let res = gof_test(&series, 1, &cfg, 199, 100, seed.substream(2 * i + 1)).unwrap();
        if res.p_value < 0.05 {
            rejected += 1;
        }
    }
    assert!(rejected >= 3, "only {rejected} of 4 strongly non-INAR series were rejected");
}

fn spec_model(spec: &DgpSpec) -> InarModel {
    match &spec.variant {
        DgpVariant::InarP { model } => model.clone(),
        _ => panic!("expected an INAR spec"),
    }
}

fn make_poisson_pmf(lambda: f64) -> Pmf {
    inar_gof::dgp::make_innovation_pmf(InnovationFamily::Poisson { lambda }, 1e-12).unwrap()
}

//! Monte Carlo experiment harness: size and power tables.
//!
//! An [`ExperimentSpec`] is one table cell: a data generating process, a
//! sample size, a fitted order, a statistic configuration, and a Monte Carlo
//! method. [`run_table`] evaluates a list of cells and streams them out as
//! CSV. The [`preset`] catalog holds the simulation grids used to benchmark
//! this test, at a configurable number of samples; the reference rejection
//! rates were computed with `M = 10^4` samples, so desk-scale reruns
//! (`M = 500`) match them to about `3 * sqrt(rate (1 - rate) / M)`.
//!
//! ```
//! use inar_gof::harness::{preset, PRESET_NAMES};
//!
//! let specs = preset("table1", 500, 1)?;
//! // 4 parameter rows, 2 sample sizes, 3 weight exponents.
//! assert_eq!(specs.len(), 24);
//! assert!(PRESET_NAMES.contains(&"table8"));
//! # Ok::<(), inar_gof::Error>(())
//! ```

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{gof_test, warp_speed_experiment};
use crate::dgp::{simulate, DgpSpec, DgpVariant, InnovationFamily, RngStream};
use crate::gof::StatConfig;
use crate::{Error, Result};

/// Monte Carlo scheme for one experiment cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentMethod {
    /// One bootstrap replicate per sample, pooled critical value.
    WarpSpeed,
    /// A complete bootstrap test with `b` replicates per sample.
    FullBootstrap { b: usize },
}

/// One cell of a size or power table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Short DGP name for the CSV, e.g. `poi-inar1`.
    pub label: String,
    /// Parameter summary for the CSV, e.g. `lambda=1,alpha=0.3`.
    pub params: String,
    pub dgp: DgpSpec,
    pub n: usize,
    /// Fitted INAR order.
    pub p: usize,
    /// Statistic order, at least `p`.
    pub s: usize,
    /// Weight exponent.
    pub a: f64,
    /// Monte Carlo samples.
    pub m: usize,
    /// Nominal level.
    pub gamma: f64,
    pub method: ExperimentMethod,
    /// Bootstrap pre-run length.
    pub r: usize,
    pub seed: RngStream,
}

impl ExperimentSpec {
    /// Statistic configuration: closed form for integer weights, quadrature
    /// otherwise.
    pub fn stat_config(&self) -> Result<StatConfig> {
        if self.a.fract() == 0.0 {
            StatConfig::closed_form(self.s, self.a)
        } else {
            StatConfig::quadrature(self.s, self.a, None)
        }
    }
}

/// A finished cell.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub spec: ExperimentSpec,
    pub rejection_rate: f64,
    /// Samples dropped because a fit degenerated.
    pub excluded: usize,
    pub seconds: f64,
}

impl ExperimentRow {
    /// A run keeps its nominal interpretation only when few samples drop.
    pub fn is_valid(&self) -> bool {
        (self.excluded as f64) < 0.05 * self.spec.m as f64
    }
}

/// Runs one cell.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentRow> {
    spec.dgp.check()?;
    if !(spec.gamma > 0.0 && spec.gamma <= 1.0) {
        return Err(Error::invalid(format!("level gamma must lie in (0, 1], got {}", spec.gamma)));
    }
    let cfg = spec.stat_config()?;
    let start = Instant::now();
    let (rejection_rate, excluded) = match spec.method {
        ExperimentMethod::WarpSpeed => {
            let run =
                warp_speed_experiment(&spec.dgp, spec.n, spec.p, &cfg, spec.m, spec.r, spec.seed)?;
            (run.rejection_rate(spec.gamma)?, run.excluded)
        }
        ExperimentMethod::FullBootstrap { b } => {
            if spec.m == 0 {
                return Err(Error::invalid("need at least one Monte Carlo sample"));
            }
            let outcomes: Vec<Option<bool>> = (0..spec.m)
                .into_par_iter()
                .map(|i| {
                    let data =
                        simulate(&spec.dgp, spec.n, spec.seed.substream(2 * i as u64)).ok()?;
                    let res = gof_test(
                        &data,
                        spec.p,
                        &cfg,
                        b,
                        spec.r,
                        spec.seed.substream(2 * i as u64 + 1),
                    )
                    .ok()?;
                    Some(res.p_value <= spec.gamma)
                })
                .collect();
            let kept: Vec<bool> = outcomes.iter().flatten().copied().collect();
            if kept.is_empty() {
                return Err(Error::DegenerateInput("no samples were retained"));
            }
            let rate = kept.iter().filter(|r| **r).count() as f64 / kept.len() as f64;
            (rate, spec.m - kept.len())
        }
    };
    Ok(ExperimentRow { spec: spec.clone(), rejection_rate, excluded, seconds: start.elapsed().as_secs_f64() })
}

pub const CSV_HEADER: &str = "dgp,params,n,p,s,a,M,method,rejection_rate,excluded,seconds";

/// Runs every cell in order and streams CSV rows to `out` as they finish.
pub fn run_table(specs: &[ExperimentSpec], out: &mut dyn Write) -> Result<Vec<ExperimentRow>> {
    writeln!(out, "{CSV_HEADER}").map_err(|e| Error::Io(e.to_string()))?;
    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let row = run_experiment(spec)?;
        writeln!(out, "{}", row.to_csv()).map_err(|e| Error::Io(e.to_string()))?;
        out.flush().map_err(|e| Error::Io(e.to_string()))?;
        rows.push(row);
    }
    Ok(rows)
}

impl ExperimentRow {
    pub fn to_csv(&self) -> String {
        let s = &self.spec;
        let method = match s.method {
            ExperimentMethod::WarpSpeed => "warp".to_string(),
            ExperimentMethod::FullBootstrap { b } => format!("full(B={b})"),
        };
        [
            csv_field(&s.label),
            csv_field(&s.params),
            s.n.to_string(),
            s.p.to_string(),
            s.s.to_string(),
            s.a.to_string(),
            s.m.to_string(),
            csv_field(&method),
            self.rejection_rate.to_string(),
            self.excluded.to_string(),
            format!("{:.3}", self.seconds),
        ]
        .join(",")
    }
}

/// RFC 4180 quoting for fields that need it.
fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

pub const PRESET_NAMES: [&str; 14] = [
    "table1", "table2", "table3", "table4", "table5", "table6", "table7", "table8", "table9",
    "s3", "s4", "s5", "s6", "s7",
];

/// Expands a named preset into its experiment cells.
///
/// Presets `table1..table9` are the main study grids, `s3..s7` the
/// supplementary ones: for each parameter row the cells cover
/// `n in {100, 500}` and `a in {0, 2, 5}` with warp-speed calibration at
/// level 0.05. `m` is the number of Monte Carlo samples per cell and each
/// cell gets its own RNG stream derived from `seed`.
pub fn preset(name: &str, m: usize, seed: u64) -> Result<Vec<ExperimentSpec>> {
    let cells = match name {
        // Sizes: Poisson INAR(1).
        "table1" => poi_inar1_grid(&[(1.0, 0.3), (1.0, 0.5), (3.0, 0.3), (3.0, 0.5)], 1),
        // Sizes: negative binomial INAR(1).
        "table2" => nb_inar1_grid(1),
        // Sizes: Poisson INAR(2) fitted with p = 2.
        "table3" => poi_inar2_grid(2, 2),
        // Power: Poisson INAR(2) fitted as INAR(1).
        "table4" => poi_inar2_grid(1, 1),
        // Power: INGARCH(1,1) against the INAR(1) null.
        "table5" => ingarch_grid(1),
        // Power: Poisson INAR(2) fitted as INAR(1), second-order statistic.
        "table6" => poi_inar2_grid(1, 2),
        // Power: INARCH(1) against the INAR(1) null.
        "table7" => inarch_grid(),
        // Power: Poisson DAR(1) against the INAR(1) null.
        "table8" => poidar_grid(),
        // Power: INGARCH(1,1), second-order statistic.
        "table9" => ingarch_grid(2),
        // Sizes: INAR(1) coefficients near the boundary.
        "s3" => poi_inar1_grid(&[(1.0, 0.1), (1.0, 0.9), (3.0, 0.1), (3.0, 0.9)], 1),
        // Power: INAR(2) with very weak and very strong dependence.
        "s4" => poi_inar2_rev_grid(1),
        // Sizes: Poisson INAR(1), second-order statistic.
        "s5" => poi_inar1_grid(&[(1.0, 0.3), (1.0, 0.5), (3.0, 0.3), (3.0, 0.5)], 2),
        // Sizes: negative binomial INAR(1), second-order statistic.
        "s6" => nb_inar1_grid(2),
        // Power: INAR(2) near-boundary grid, second-order statistic.
        "s7" => poi_inar2_rev_grid(2),
        other => {
            return Err(Error::invalid(format!(
                "unknown preset '{other}'; available: {}",
                PRESET_NAMES.join(", ")
            )))
        }
    }?;
    Ok(expand(cells, m, seed))
}

/// (label, params, dgp, fitted order, statistic order)
type Cell = (String, String, DgpSpec, usize, usize);

fn expand(cells: Vec<Cell>, m: usize, seed: u64) -> Vec<ExperimentSpec> {
    let mut specs = Vec::new();
    let mut stream = 0;
    for (label, params, dgp, p, s) in cells {
        for n in [100usize, 500] {
            for a in [0.0, 2.0, 5.0] {
                specs.push(ExperimentSpec {
                    label: label.clone(),
                    params: params.clone(),
                    dgp: dgp.clone(),
                    n,
                    p,
                    s,
                    a,
                    m,
                    gamma: 0.05,
                    method: ExperimentMethod::WarpSpeed,
                    r: 100,
                    seed: RngStream::new(seed, stream),
                });
                stream += 1;
            }
        }
    }
    specs
}

fn poi_inar1_grid(rows: &[(f64, f64)], s: usize) -> Result<Vec<Cell>> {
    rows.iter()
        .map(|&(lambda, alpha)| {
            Ok((
                "poi-inar1".to_string(),
                format!("lambda={lambda},alpha={alpha}"),
                DgpSpec::inar(InnovationFamily::Poisson { lambda }, vec![alpha])?,
                1,
                s,
            ))
        })
        .collect()
}

fn nb_inar1_grid(s: usize) -> Result<Vec<Cell>> {
    [(1.0, 0.5), (2.0, 2.0 / 3.0), (10.0, 10.0 / 11.0)]
        .iter()
        .map(|&(n_param, pi)| {
            Ok((
                "nb-inar1".to_string(),
                format!("n={n_param},pi={pi:.4},alpha=0.5"),
                DgpSpec::inar(InnovationFamily::NegBin { n: n_param, pi }, vec![0.5])?,
                1,
                s,
            ))
        })
        .collect()
}

fn poi_inar2_cells(rows: &[(f64, f64)], p: usize, s: usize) -> Result<Vec<Cell>> {
    rows.iter()
        .map(|&(a1, a2)| {
            Ok((
                "poi-inar2".to_string(),
                format!("lambda=1,alpha1={a1},alpha2={a2}"),
                DgpSpec::inar(InnovationFamily::Poisson { lambda: 1.0 }, vec![a1, a2])?,
                p,
                s,
            ))
        })
        .collect()
}

fn poi_inar2_grid(p: usize, s: usize) -> Result<Vec<Cell>> {
    poi_inar2_cells(&[(0.3, 0.1), (0.5, 0.1), (0.5, 0.3)], p, s)
}

fn poi_inar2_rev_grid(s: usize) -> Result<Vec<Cell>> {
    poi_inar2_cells(&[(0.05, 0.05), (0.4, 0.5)], 1, s)
}

fn ingarch_grid(s: usize) -> Result<Vec<Cell>> {
    [
        (0.2, 0.4, 0.10),
        (0.2, 0.4, 0.20),
        (1.0, 0.1, 0.50),
        (0.5, 0.1, 0.50),
        (0.1, 0.4, 0.40),
        (0.6, 0.1, 0.60),
        (0.1, 0.2, 0.60),
        (0.1, 0.5, 0.45),
    ]
    .iter()
    .map(|&(beta0, beta1, alpha1)| {
        Ok((
            "ingarch11".to_string(),
            format!("beta0={beta0},beta1={beta1},alpha1={alpha1}"),
            DgpSpec::new(DgpVariant::Ingarch11 { beta0, beta1, alpha1 })?,
            1,
            s,
        ))
    })
    .collect()
}

fn inarch_grid() -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for beta in [1.0, 3.0] {
        for alpha in [0.30, 0.50, 0.75] {
            cells.push((
                "inarch1".to_string(),
                format!("beta={beta},alpha={alpha}"),
                DgpSpec::new(DgpVariant::Inarch1 { beta, alpha })?,
                1,
                1,
            ));
        }
    }
    Ok(cells)
}

fn poidar_grid() -> Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for lambda in [2.0, 6.0] {
        for alpha in [0.25, 0.50, 0.75] {
            cells.push((
                "poi-dar1".to_string(),
                format!("lambda={lambda},alpha={alpha}"),
                DgpSpec::new(DgpVariant::PoiDar1 { lambda, alpha })?,
                1,
                1,
            ));
        }
    }
    Ok(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_expand_to_the_expected_grid() {
        let t1 = preset("table1", 500, 1).unwrap();
        assert_eq!(t1.len(), 24);
        assert!(t1.iter().all(|c| c.p == 1 && c.s == 1 && c.m == 500));
        // Streams are distinct so cells are independent.
        let mut streams: Vec<u64> = t1.iter().map(|c| c.seed.stream).collect();
        streams.dedup();
        assert_eq!(streams.len(), 24);

        assert_eq!(preset("table2", 100, 1).unwrap().len(), 18);
        assert_eq!(preset("table5", 100, 1).unwrap().len(), 48);
        let t6 = preset("table6", 100, 1).unwrap();
        assert!(t6.iter().all(|c| c.p == 1 && c.s == 2));
        let t3 = preset("table3", 100, 1).unwrap();
        assert!(t3.iter().all(|c| c.p == 2 && c.s == 2));
        assert_eq!(preset("s4", 100, 1).unwrap().len(), 12);
        assert!(preset("nope", 100, 1).is_err());
    }

    #[test]
    fn csv_rows_quote_the_params_field() {
        let spec = preset("table1", 500, 1).unwrap().into_iter().next().unwrap();
        let row = ExperimentRow { spec, rejection_rate: 0.036, excluded: 0, seconds: 1.5 };
        let line = row.to_csv();
        assert!(line.starts_with("poi-inar1,\"lambda=1,alpha=0.3\",100,1,1,0,500,warp,0.036,0,"));
        assert!(row.is_valid());
        let mut fields = 0;
        let mut in_quotes = false;
        for c in line.chars() {
            match c {
                '"' => in_quotes = !in_quotes,
                ',' if !in_quotes => fields += 1,
                _ => {}
            }
        }
        assert_eq!(fields + 1, CSV_HEADER.split(',').count());
    }

    #[test]
    fn small_full_bootstrap_cell_runs_end_to_end() {
        let spec = ExperimentSpec {
            label: "poi-inar1".into(),
            params: "lambda=1,alpha=0.5".into(),
            dgp: DgpSpec::inar(InnovationFamily::Poisson { lambda: 1.0 }, vec![0.5]).unwrap(),
            n: 40,
            p: 1,
            s: 1,
            a: 2.0,
            m: 8,
            gamma: 0.05,
            method: ExperimentMethod::FullBootstrap { b: 19 },
            r: 50,
            seed: RngStream::new(3, 0),
        };
        let mut csv = Vec::new();
        let rows = run_table(std::slice::from_ref(&spec), &mut csv).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((0.0..=1.0).contains(&rows[0].rejection_rate));
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert!(text.contains("full(B=19)"));
    }

    #[test]
    fn experiment_rejects_bad_level() {
        let mut spec = preset("table1", 50, 1).unwrap().into_iter().next().unwrap();
        spec.gamma = 0.0;
        assert!(run_experiment(&spec).is_err());
    }

    #[test]
    fn warp_speed_cells_are_reproducible() {
        let mut spec = preset("table1", 50, 7).unwrap().into_iter().next().unwrap();
        spec.n = 40;
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a.rejection_rate.to_bits(), b.rejection_rate.to_bits());
        assert_eq!(a.excluded, b.excluded);
    }
}

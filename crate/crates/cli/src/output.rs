//! Report structures and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use inar_gof::bootstrap::GofResult;
use inar_gof::dgp::RngStream;
use inar_gof::estimate::FitResult;

use crate::Failure;

/// JSON document for the `test` subcommand. Carries everything needed to
/// re-run the test and reproduce statistic and p-value exactly.
#[derive(Serialize)]
pub struct TestReport {
    pub n: usize,
    pub p: usize,
    pub s: usize,
    pub a: f64,
    #[serde(rename = "B")]
    pub b: usize,
    pub r: usize,
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    pub alphas: Vec<f64>,
    pub innovation_pmf: Vec<f64>,
    pub converged: bool,
    pub excluded_replicates: usize,
    pub seed: RngStream,
}

impl TestReport {
    pub fn new(n: usize, p: usize, r: usize, method: &str, res: &GofResult) -> TestReport {
        TestReport {
            n,
            p,
            s: res.cfg.s,
            a: res.cfg.a,
            b: res.b,
            r,
            method: method.to_string(),
            statistic: res.statistic,
            p_value: res.p_value,
            alphas: res.fit.model.alphas().to_vec(),
            innovation_pmf: res.fit.model.innovations().masses().to_vec(),
            converged: res.fit.converged,
            excluded_replicates: res.excluded,
            seed: res.seed,
        }
    }

    pub fn human(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "n = {}, fitted order p = {}, statistic order s = {}, weight a = {}\n",
            self.n, self.p, self.s, self.a
        ));
        out.push_str(&format!("alpha_hat = {}\n", join(&self.alphas)));
        out.push_str(&format!("statistic T_n = {:.6e}\n", self.statistic));
        out.push_str(&format!(
            "bootstrap p-value = {:.4} (B = {}, excluded replicates = {})\n",
            self.p_value, self.b, self.excluded_replicates
        ));
        let verdict = if self.p_value <= 0.05 { "reject" } else { "do not reject" };
        out.push_str(&format!("decision at the 5% level: {verdict} the INAR({}) null\n", self.p));
        out
    }
}

/// JSON document for the `estimate` subcommand.
#[derive(Serialize)]
pub struct EstimateReport {
    pub n: usize,
    pub p: usize,
    pub alphas: Vec<f64>,
    pub innovation_pmf: Vec<f64>,
    pub innovation_mean: f64,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub boundary: bool,
}

impl EstimateReport {
    pub fn new(n: usize, p: usize, fit: &FitResult) -> EstimateReport {
        EstimateReport {
            n,
            p,
            alphas: fit.model.alphas().to_vec(),
            innovation_pmf: fit.model.innovations().masses().to_vec(),
            innovation_mean: fit.model.innovations().mean(),
            loglik: fit.loglik,
            iterations: fit.iterations,
            converged: fit.converged,
            boundary: fit.boundary,
        }
    }

    pub fn human(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("n = {}, fitted order p = {}\n", self.n, self.p));
        out.push_str(&format!("alpha_hat = {}\n", join(&self.alphas)));
        out.push_str(&format!("innovation mean = {:.4}\n", self.innovation_mean));
        let pmf: Vec<String> =
            self.innovation_pmf.iter().map(|m| format!("{m:.4}")).collect();
        out.push_str(&format!("innovation pmf = {}\n", pmf.join(", ")));
        out.push_str(&format!(
            "conditional loglikelihood = {:.6} after {} iterations (converged: {})\n",
            self.loglik, self.iterations, self.converged
        ));
        if self.boundary {
            out.push_str("note: a thinning coefficient ended on the feasible-set boundary\n");
        }
        out
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

pub fn to_json(value: &impl Serialize) -> Result<String, Failure> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Compute(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Writes to `path` through a temporary file and an atomic rename, or to
/// stdout when no path is given. Errors never leave partial output behind.
pub fn emit(out: Option<&Path>, content: &str) -> Result<(), Failure> {
    match out {
        None => {
            print!("{content}");
            std::io::stdout()
                .flush()
                .map_err(|e| Failure::Input(format!("cannot write stdout: {e}")))
        }
        Some(path) => atomic_write(path, content.as_bytes()),
    }
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Failure::Input(format!("cannot create temporary file in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)
        .map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| Failure::Input(format!("cannot finalize {}: {e}", path.display())))?;
    Ok(())
}

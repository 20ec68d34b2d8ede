//! Series ingestion and the DGP spec mini-language.

use std::io::Read;
use std::path::Path;

use inar_gof::dgp::{DgpSpec, DgpVariant, InnovationFamily};
use inar_gof::series::CountSeries;

use crate::Failure;

/// Reads a count series from a text file, or from stdin when `path` is `-`.
/// Accepts one non-negative integer per line; blank lines and `#` comments
/// are skipped; a single-column CSV header is tolerated on the first data
/// line only.
pub fn read_series(path: &Path) -> Result<CountSeries, Failure> {
    let text = if path.as_os_str() == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Failure::Input(format!("cannot read stdin: {e}")))?;
        buf
    } else {
        std::fs::read_to_string(path)
            .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?
    };
    let values = parse_counts(&text)?;
    CountSeries::from_counts(values).map_err(|e| Failure::Input(e.to_string()))
}

fn parse_counts(text: &str) -> Result<Vec<u32>, Failure> {
    let mut values = Vec::new();
    let mut saw_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.trim_matches('"').trim();
        match parse_count(field) {
            Some(v) => {
                values.push(v);
                saw_data = true;
            }
            None if !saw_data => {
                // A single-column CSV may open with a header such as
                // `count`; tolerate exactly one non-numeric lead line.
                saw_data = true;
            }
            None => {
                return Err(Failure::Input(format!(
                    "line {}: expected a non-negative integer, got '{line}'",
                    idx + 1
                )));
            }
        }
    }
    if values.is_empty() {
        return Err(Failure::Input("no observations found in input".to_string()));
    }
    Ok(values)
}

fn parse_count(field: &str) -> Option<u32> {
    if field.contains(',') {
        return None;
    }
    field.parse::<u32>().ok()
}

/// Parses `name:key=value,...` into a data generating process.
pub fn parse_dgp(text: &str, burn_in: Option<usize>) -> Result<DgpSpec, Failure> {
    let (name, rest) = match text.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (text.trim(), ""),
    };
    let mut params = Params::parse(name, rest)?;
    let variant = match name {
        "poi-inar1" => inar_variant(
            InnovationFamily::Poisson { lambda: params.take("lambda")? },
            vec![params.take("alpha")?],
        )?,
        "poi-inar2" => inar_variant(
            InnovationFamily::Poisson { lambda: params.take("lambda")? },
            vec![params.take("alpha1")?, params.take("alpha2")?],
        )?,
        "nb-inar1" => inar_variant(
            InnovationFamily::NegBin { n: params.take("n")?, pi: params.take("pi")? },
            vec![params.take("alpha")?],
        )?,
        "geom-inar1" => inar_variant(
            InnovationFamily::Geometric { pi: params.take("pi")? },
            vec![params.take("alpha")?],
        )?,
        "ingarch11" => DgpVariant::Ingarch11 {
            beta0: params.take("beta0")?,
            beta1: params.take("beta1")?,
            alpha1: params.take("alpha1")?,
        },
        "inarch1" => {
            DgpVariant::Inarch1 { beta: params.take("beta")?, alpha: params.take("alpha")? }
        }
        "poi-dar1" => {
            DgpVariant::PoiDar1 { lambda: params.take("lambda")?, alpha: params.take("alpha")? }
        }
        other => {
            return Err(Failure::Input(format!(
                "unknown DGP '{other}'; expected one of poi-inar1, poi-inar2, nb-inar1, \
                 geom-inar1, ingarch11, inarch1, poi-dar1"
            )));
        }
    };
    params.finish()?;
    let spec = DgpSpec::new(variant).map_err(|e| Failure::Input(e.to_string()))?;
    Ok(match burn_in {
        Some(r) => spec.with_burn_in(r),
        None => spec,
    })
}

fn inar_variant(family: InnovationFamily, alphas: Vec<f64>) -> Result<DgpVariant, Failure> {
    let spec = DgpSpec::inar(family, alphas).map_err(|e| Failure::Input(e.to_string()))?;
    Ok(spec.variant)
}

struct Params {
    name: String,
    pairs: Vec<(String, f64)>,
}

impl Params {
    fn parse(name: &str, rest: &str) -> Result<Params, Failure> {
        let mut pairs = Vec::new();
        for piece in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = piece.split_once('=').ok_or_else(|| {
                Failure::Input(format!("DGP parameter '{piece}' is not key=value"))
            })?;
            let parsed: f64 = value.trim().parse().map_err(|_| {
                Failure::Input(format!("DGP parameter '{}' has non-numeric value '{value}'", key.trim()))
            })?;
            pairs.push((key.trim().to_string(), parsed));
        }
        Ok(Params { name: name.to_string(), pairs })
    }

    fn take(&mut self, key: &str) -> Result<f64, Failure> {
        match self.pairs.iter().position(|(k, _)| k == key) {
            Some(i) => Ok(self.pairs.remove(i).1),
            None => Err(Failure::Input(format!("DGP '{}' needs parameter '{key}'", self.name))),
        }
    }

    fn finish(self) -> Result<(), Failure> {
        if let Some((key, _)) = self.pairs.first() {
            return Err(Failure::Input(format!(
                "DGP '{}' does not take parameter '{key}'",
                self.name
            )));
        }
        Ok(())
    }
}

//! Network file schema (TOML or JSON) and ingestion into a validated
//! [`GeneratorNetwork`].

use std::path::Path;

use ecmgrid_core::{DMatrix, DVector, GeneratorNetwork, ReducedAdmittanceData};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Bundled 9-bus network, addressable as `ieee9` on the command line.
pub const IEEE9_TOML: &str = include_str!("../data/ieee9.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdmittanceSpec {
    pub y_real: Vec<Vec<f64>>,
    pub y_imag: Vec<Vec<f64>>,
    pub e: Vec<f64>,
    pub theta_eq: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpecFile {
    pub name: String,
    pub n: usize,
    pub inertia: Vec<f64>,
    pub damping: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laplacian: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admittance: Option<AdmittanceSpec>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub name: String,
    pub net: GeneratorNetwork,
    pub warnings: Vec<String>,
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn check_vector(field: &str, v: &[f64], n: usize, positive: bool) -> CliResult<()> {
    if v.len() != n {
        return Err(invalid(format!(
            "{field}: has {} entries, expected n = {n}",
            v.len()
        )));
    }
    for (k, x) in v.iter().enumerate() {
        if !x.is_finite() {
            return Err(invalid(format!("{field}[{k}]: not a finite number")));
        }
        if positive && *x <= 0.0 {
            return Err(invalid(format!("{field}[{k}]: {x} must be positive")));
        }
    }
    Ok(())
}

fn to_matrix(field: &str, rows: &[Vec<f64>], n: usize) -> CliResult<DMatrix<f64>> {
    if rows.len() != n {
        return Err(invalid(format!(
            "{field}: has {} rows, expected n = {n}",
            rows.len()
        )));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(invalid(format!(
                "{field}[{r}]: has {} entries, expected {n}",
                row.len()
            )));
        }
        if let Some(c) = row.iter().position(|x| !x.is_finite()) {
            return Err(invalid(format!("{field}[{r}][{c}]: not a finite number")));
        }
    }
    Ok(DMatrix::from_fn(n, n, |r, c| rows[r][c]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl NetworkSpecFile {
    pub fn parse(text: &str, json: bool) -> CliResult<Self> {
        if json {
            serde_json::from_str(text).map_err(|e| invalid(format!("network file: {e}")))
        } else {
            toml::from_str(text).map_err(|e| invalid(format!("network file: {e}")))
        }
    }

    /// Builds the network; Laplacian input is re-symmetrized and its diagonal
    /// rebalanced before the invariant checks.
    pub fn build(&self) -> CliResult<Ingested> {
        let n = self.n;
        if n < 2 {
            return Err(invalid(format!("n: need at least 2 generators, got {n}")));
        }
        check_vector("inertia", &self.inertia, n, true)?;
        check_vector("damping", &self.damping, n, true)?;
        let mut warnings = Vec::new();
        let net = match (&self.laplacian, &self.admittance) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(invalid(
                    "exactly one of `laplacian` or `admittance` must be given",
                ));
            }
            (Some(rows), None) => {
                let l = to_matrix("laplacian", rows, n)?;
                let (net, canon) = GeneratorNetwork::from_raw_laplacian(
                    self.inertia.clone(),
                    self.damping.clone(),
                    l,
                )
                .map_err(|e| invalid(format!("laplacian: {e}")))?;
                if canon.max_asymmetry > 1e-6 {
                    warnings.push(format!(
                        "laplacian: re-symmetrized, largest asymmetry {:.3e}",
                        canon.max_asymmetry
                    ));
                }
                if canon.max_diagonal_shift > 1e-6 {
                    warnings.push(format!(
                        "laplacian: diagonal rebalanced to zero row sums, largest shift {:.3e}",
                        canon.max_diagonal_shift
                    ));
                }
                net
            }
            (None, Some(adm)) => {
                check_vector("admittance.e", &adm.e, n, true)?;
                check_vector("admittance.theta_eq", &adm.theta_eq, n, false)?;
                let data = ReducedAdmittanceData {
                    y_real: to_matrix("admittance.y_real", &adm.y_real, n)?,
                    y_imag: to_matrix("admittance.y_imag", &adm.y_imag, n)?,
                    e: DVector::from_column_slice(&adm.e),
                    theta_eq: DVector::from_column_slice(&adm.theta_eq),
                };
                GeneratorNetwork::from_admittance(self.inertia.clone(), self.damping.clone(), data)
                    .map_err(|e| invalid(format!("admittance: {e}")))?
            }
        };
        Ok(Ingested {
            name: self.name.clone(),
            net,
            warnings,
        })
    }

    /// Canonical file content of a network: the admittance data when the
    /// network was built from it, the Laplacian otherwise.
    pub fn from_network(name: &str, net: &GeneratorNetwork) -> Self {
        let admittance = net.admittance().map(|d| AdmittanceSpec {
            y_real: rows_of(&d.y_real),
            y_imag: rows_of(&d.y_imag),
            e: d.e.iter().copied().collect(),
            theta_eq: d.theta_eq.iter().copied().collect(),
        });
        Self {
            name: name.to_string(),
            n: net.n(),
            inertia: net.inertia().iter().copied().collect(),
            damping: net.damping().iter().copied().collect(),
            laplacian: admittance.is_none().then(|| rows_of(net.laplacian())),
            admittance,
        }
    }

    /// Same machines with an explicit Laplacian, e.g. after modification.
    pub fn with_laplacian(name: &str, net: &GeneratorNetwork, l: &DMatrix<f64>) -> Self {
        Self {
            name: name.to_string(),
            n: net.n(),
            inertia: net.inertia().iter().copied().collect(),
            damping: net.damping().iter().copied().collect(),
            laplacian: Some(rows_of(l)),
            admittance: None,
        }
    }

    pub fn to_toml(&self) -> CliResult<String> {
        toml::to_string(self).map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Reads a network file, or the bundled 9-bus system for the name `ieee9`.
pub fn ingest(path: &str) -> CliResult<Ingested> {
    let (text, json) = if path == "ieee9" {
        (IEEE9_TOML.to_string(), false)
    } else {
        let p = Path::new(path);
        let text = std::fs::read_to_string(p)
            .map_err(|e| CliError::Io(format!("cannot read network file '{path}': {e}")))?;
        let json = p
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        (text, json)
    };
    NetworkSpecFile::parse(&text, json)?.build()
}

//! Report assembly and rendering: CSV tables with `#` header lines, or one
//! JSON document.

use std::path::Path;

use ecmgrid_core::{DMatrix, VERSION};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};

/// Floats in tables carry 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn matrix(name: &str, m: &DMatrix<f64>) -> Self {
        let header: Vec<String> = std::iter::once("row".to_string())
            .chain((1..=m.ncols()).map(|c| format!("c{c}")))
            .collect();
        let rows = m
            .row_iter()
            .enumerate()
            .map(|(r, row)| {
                std::iter::once((r + 1).to_string())
                    .chain(row.iter().map(|&x| num(x)))
                    .collect()
            })
            .collect();
        Self {
            name: name.to_string(),
            header,
            rows,
        }
    }

    fn write_csv(&self, out: &mut Vec<u8>) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

/// One command's output. `result` is the structured form used for JSON; the
/// tables are the CSV form of the same data.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: RunConfig,
    pub result: Value,
    pub tables: Vec<Table>,
    /// Extra files for `--out`: plot data and derived networks.
    pub files: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl Report {
    pub fn new(
        command: &'static str,
        config: RunConfig,
        result: impl Serialize,
    ) -> CliResult<Self> {
        let result = serde_json::to_value(result).map_err(|e| CliError::Io(e.to_string()))?;
        Ok(Self {
            command,
            config,
            result,
            tables: Vec::new(),
            files: Vec::new(),
            warnings: Vec::new(),
        })
    }

    pub fn render(&self, format: Format) -> CliResult<String> {
        let config = serde_json::to_value(&self.config).map_err(|e| CliError::Io(e.to_string()))?;
        match format {
            Format::Json => {
                let doc = json!({
                    "version": VERSION,
                    "command": self.command,
                    "config": config,
                    "result": self.result,
                });
                let mut s =
                    serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let mut out = Vec::new();
                out.extend_from_slice(
                    format!("# ecmgrid {VERSION} {}\n# config {config}\n", self.command).as_bytes(),
                );
                for t in &self.tables {
                    out.extend_from_slice(format!("# {}\n", t.name).as_bytes());
                    t.write_csv(&mut out)?;
                }
                String::from_utf8(out).map_err(|e| CliError::Io(e.to_string()))
            }
        }
    }

    /// Writes the rendered report and the extra files into `dir`.
    pub fn write_to(&self, dir: &Path, format: Format) -> CliResult<Vec<String>> {
        std::fs::create_dir_all(dir)?;
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let mut written = Vec::new();
        let main = dir.join(format!("{}.{ext}", self.command));
        std::fs::write(&main, self.render(format)?)?;
        written.push(main.display().to_string());
        for (name, body) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, body)?;
            written.push(p.display().to_string());
        }
        Ok(written)
    }
}

/// Gnuplot-style two-column data with a comment header.
pub fn two_column(title: &str, x: &str, y: &str, points: &[(f64, f64)]) -> String {
    let mut s = format!("# {title}\n# {x} {y}\n");
    for (a, b) in points {
        s.push_str(&format!("{} {}\n", num(*a), num(*b)));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.1276, 1e-300, 6.02214076e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn matrix_table_shape() {
        let t = Table::matrix("m", &DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert_eq!(t.header, vec!["row", "c1", "c2"]);
        assert_eq!(t.rows[1][2].parse::<f64>().unwrap(), 4.0);
    }

    #[test]
    fn plot_data() {
        let s = two_column("t", "x", "y", &[(1.0, 2.0)]);
        let last = s.lines().last().unwrap();
        let v: Vec<f64> = last.split(' ').map(|t| t.parse().unwrap()).collect();
        assert_eq!(v, vec![1.0, 2.0]);
    }
}

//! Command-line workflows on top of `ecmgrid-core`: network ingestion,
//! ranking, modification, brute-force comparison, energy and damping reports.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod schema;

use config::{Cli, Command, Format};
use error::CliResult;
use output::Report;

/// What a successful run prints: the report on stdout, notes on stderr.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub stdout: String,
    pub notes: Vec<String>,
}

fn dispatch(cli: &Cli) -> CliResult<(Report, Format, Option<std::path::PathBuf>)> {
    let (report, run) = match &cli.command {
        Command::Analyze(a) => (commands::analyze(a)?, a),
        Command::Modify(a) => (commands::modify(a)?, &a.run),
        Command::Oracle(a) => (commands::oracle(a)?, &a.run),
        Command::Energy(a) => (commands::energy(a)?, &a.run),
        Command::Damping(a) => (commands::damping(a)?, &a.run),
        Command::Sweep(a) => (commands::sweep(a)?, &a.run),
    };
    Ok((report, run.format, run.out.clone()))
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let (report, format, out) = dispatch(cli)?;
    let mut notes: Vec<String> = report
        .warnings
        .iter()
        .map(|w| format!("warning: {w}"))
        .collect();
    if let Some(dir) = out {
        for path in report.write_to(&dir, format)? {
            notes.push(format!("wrote {path}"));
        }
    }
    Ok(Outcome {
        stdout: report.render(format)?,
        notes,
    })
}

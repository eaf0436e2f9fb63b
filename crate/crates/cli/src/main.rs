use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use ecmgrid_cli::config::{workers_from_env, Cli, WORKERS_ENV};
use ecmgrid_cli::error::CliResult;

fn init_workers() -> CliResult<()> {
    let var = std::env::var(WORKERS_ENV).ok();
    if let Some(n) = workers_from_env(var.as_deref())? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ecmgrid_cli::error::CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_workers().and_then(|_| ecmgrid_cli::run(&cli)) {
        Ok(outcome) => {
            for n in &outcome.notes {
                eprintln!("{n}");
            }
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(outcome.stdout.as_bytes()).is_err() {
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("ecmgrid: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

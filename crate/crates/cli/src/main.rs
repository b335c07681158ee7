mod args;
mod output;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Format};
use crate::run::CliError;

/// Environment variable overriding the worker-thread count.
const THREADS_VAR: &str = "FINCOV_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or(CliError::Usage {
            field: "FINCOV_THREADS",
            reason: format!("expected a positive integer, got {raw:?}"),
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage {
            field: "FINCOV_THREADS",
            reason: e.to_string(),
        })
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();

    let result = configure_threads().and_then(|()| {
        let (report, format) = run::execute(&cli.command)?;
        let text = match format {
            Format::Csv => report.csv(),
            Format::Json => report.json(),
        };
        match &cli.command.common().output {
            Some(path) => std::fs::write(path, text)?,
            None => std::io::stdout().lock().write_all(text.as_bytes())?,
        }
        Ok(())
    });

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] overlapkit::Error),
    #[error("acceptance test failed: {0}")]
    Acceptance(String),
    #[error("writing output: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Core(e) if e.is_parameter_error() => 1,
            CliError::Acceptance(_) => 2,
            CliError::Core(_) => 3,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    match &cli.command {
        Command::Density(a) => commands::density(a)?.write(a.output.format, a.output.out.as_deref())?,
        Command::Theory(a) => commands::theory(a)?.write(a.output.format, a.output.out.as_deref())?,
        Command::Simulate(a) => commands::simulate(a)?.write(a.output.format, a.output.out.as_deref())?,
        Command::Compare(a) => {
            let (table, fraction) = commands::compare(a)?;
            table.write(a.output.format, a.output.out.as_deref())?;
            let summary = format!("{:.1}% of channel-points within 3 standard errors", 100.0 * fraction);
            if fraction < a.min_fraction {
                return Err(CliError::Acceptance(format!("{summary} (required {:.1}%)", 100.0 * a.min_fraction)));
            }
            eprintln!("{summary}");
        }
        Command::BurgersCheck(a) => commands::burgers_check(a)?.write(a.output.format, a.output.out.as_deref())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

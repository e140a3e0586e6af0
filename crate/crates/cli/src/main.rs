mod commands;
mod perm_args;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use commands::{CliError, Command};

/// Invariant and equivariant linear maps under permutation actions.
#[derive(Parser)]
#[command(name = "permnet", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Thread count for the parallel block solves; unset means rayon's default.
const THREADS_ENV: &str = "PERMNET_THREADS";

fn configure_threads() -> Result<(), CliError> {
    let Ok(text) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = text
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{text}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("{THREADS_ENV}: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| commands::run(cli.command));
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            Cli::command()
                .error(clap::error::ErrorKind::ValueValidation, msg)
                .exit()
        }
        Err(CliError::Core(e)) => {
            let payload = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{payload}");
            ExitCode::from(1)
        }
    }
}

mod args;
mod commands;
mod error;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, CliResult};

fn out_dir(cli: &Cli) -> CliResult<PathBuf> {
    let dir = match std::env::var_os("REGIMEKIT_OUT") {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => cli.out_dir.clone(),
    };
    std::fs::create_dir_all(&dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    Ok(dir)
}

fn run(cli: &Cli) -> CliResult<u8> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::usage("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Describe(a) => commands::describe_cmd(a, &out_dir(cli)?),
        Command::Fit(a) => commands::fit_cmd(a, &out_dir(cli)?),
        Command::Regimes(a) => commands::regimes_cmd(a),
        Command::Simulate(a) => commands::simulate_cmd(a, &out_dir(cli)?),
        Command::Recover(a) => commands::recover_cmd(a, &out_dir(cli)?),
        Command::Lagsearch(a) => commands::lagsearch_cmd(a, &out_dir(cli)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

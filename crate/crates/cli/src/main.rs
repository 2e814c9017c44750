//! `qpb`: command-line experiments writing CSV tables and a run manifest.

mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;
use qpb_core::QpbError;

use commands::Command;

#[derive(Parser, Debug)]
#[command(
    name = "qpb",
    version,
    about = "Quantum photonics simulations: Gaussian states, SU(1,1) metrology, camera squeezing, \
             source discrimination and turbulence correction",
    after_help = "Set QPB_THREADS to cap the number of worker threads. Exit status: 0 success, \
                  1 numerical failure, 2 usage error."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("QPB_THREADS") else {
        return Ok(());
    };
    let n: usize =
        value.trim().parse().map_err(|_| format!("QPB_THREADS must be a positive integer, got {value:?}"))?;
    if n == 0 {
        return Err("QPB_THREADS must be at least 1".into());
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

/// Usage problems (bad values, unwritable paths) exit with 2, everything else with 1.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<std::io::Error>().is_some() || cause.downcast_ref::<commands::UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<QpbError>() {
            return match e {
                QpbError::OutOfRange { .. } | QpbError::Empty(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

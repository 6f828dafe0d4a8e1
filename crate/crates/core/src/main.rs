use std::process::ExitCode;

use clap::Parser;
use coda_splr::cli::{self, Cli, EXIT_NONCONVERGENCE};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or(cli::LOG_ENV, "warn")).init();
    let args = match Cli::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match cli::run(args) {
        Ok(outcome) if outcome.warnings.is_empty() => ExitCode::SUCCESS,
        Ok(outcome) => {
            eprintln!("finished with {} solver warning(s); outputs were written", outcome.warnings.len());
            ExitCode::from(EXIT_NONCONVERGENCE)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

mod config;
mod error;
mod output;
mod run;

use std::process::ExitCode;

use clap::Parser;

use crate::config::{parse_config, Args};
use crate::error::CliError;

/// Sizes the global worker pool from `KFKS_THREADS` (0 or unset = automatic).
fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("KFKS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("malformed value for 'KFKS_THREADS': '{raw}'")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot size thread pool: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads()
        .and_then(|_| parse_config(&args))
        .and_then(|c| run::run(&c));
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kfks: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

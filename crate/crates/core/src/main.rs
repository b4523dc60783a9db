use std::process::ExitCode;

use clap::Parser;
use duelbench::cli::{execute, Cli, SEED_ENV_VAR};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_seed = std::env::var(SEED_ENV_VAR).ok();
    let mut stdout = std::io::stdout().lock();
    match execute(&cli, env_seed.as_deref(), &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::process::ExitCode;

use clap::Parser;
use karlin_cli::{config::SEED_ENV, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_seed = std::env::var(SEED_ENV).ok();
    let result = cli.into_config(env_seed.as_deref()).and_then(|cfg| run(&cfg));
    match result {
        Ok(outcome) => {
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            if outcome.passed {
                ExitCode::SUCCESS
            } else {
                eprintln!("ksf: one or more checks failed");
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("ksf: {e:#}");
            ExitCode::from(2)
        }
    }
}

//! Command-line front end: configuration, drivers for the four subcommands,
//! and the grid, image and metadata writers.

pub mod bench;
pub mod commands;
pub mod config;
pub mod output;
pub mod suite;

use clap::{Parser, Subcommand as ClapSubcommand};

pub use commands::{run, Outcome};
pub use config::{Flags, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "ksf", version, about = "Simulate Karlin stable set-indexed random fields")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, ClapSubcommand)]
pub enum Command {
    /// Simulate a field and write its large, small and combined parts.
    Simulate(Flags),
    /// Draw odd-occupancy vectors.
    OddOccupancy(Flags),
    /// Run statistical checks; exits nonzero if any fails.
    Verify(Flags),
    /// Time the fast and generic occupancy samplers.
    Bench(Flags),
}

impl Cli {
    pub fn into_config(self, env_seed: Option<&str>) -> anyhow::Result<RunConfig> {
        let (sub, flags) = match self.command {
            Command::Simulate(f) => (config::Subcommand::Simulate, f),
            Command::OddOccupancy(f) => (config::Subcommand::OddOccupancy, f),
            Command::Verify(f) => (config::Subcommand::Verify, f),
            Command::Bench(f) => (config::Subcommand::Bench, f),
        };
        RunConfig::resolve(sub, &flags, env_seed)
    }
}

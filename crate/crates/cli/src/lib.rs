//! Command implementations behind the `percolab` binary.

// `!(x > 0)` style checks are kept on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use percolab::Runner;

use crate::config::Config;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "percolab", version, about = "Mixed short/long-range percolation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; never changes the results.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Overrides the config's base seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Estimate tau, chi and T_m tables.
    Simulate,
    /// Exact enumeration suites: HSL, FKG, fixtures, simulation agreement.
    OracleCheck,
    /// Derive and check a decay-bound certificate.
    Certify,
    /// Fit the decay form to a tau table.
    Fit,
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required".into()))?;
    let mut cfg = Config::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let runner = match cli.workers {
        Some(w) => Runner::new(w).map_err(|e| CliError::Config(e.to_string()))?,
        None => Runner::default(),
    };
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg, &cli.out, &runner).map(drop),
        Command::OracleCheck => commands::cmd_oracle_check(&cfg, &cli.out, &runner).map(drop),
        Command::Certify => commands::cmd_certify(&cfg, &cli.out, &runner).map(drop),
        Command::Fit => commands::cmd_fit(&cfg, &cli.out, &runner).map(drop),
    }
}

//! Argument surface. Shared flags: `--config`, `--cycle PATH|synth`,
//! `--repeats`, `--unit`, `--soc FLOAT|random`, `--seed`, `--out`.
//! When `--out` is absent the `PHEV_EMS_OUT` environment variable names the
//! output root, falling back to `./out`.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::{CliError, Result};

#[derive(Parser, Debug)]
#[command(
    name = "phev-ems",
    about = "Series-parallel plug-in hybrid energy-management workbench",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Roll a controller (rules or agent checkpoint) over a cycle.
    Simulate(SimulateArgs),
    /// Solve the dynamic-programming benchmark and emit its trajectory.
    Dp(DpArgs),
    /// Train the continuous-discrete agent.
    Train(TrainArgs),
    /// Run rules, dynamic programming, and a trained agent side by side.
    Compare(CompareArgs),
    /// Describe a cycle without simulating.
    CycleInfo(CycleInfoArgs),
}

/// Initial state of charge: a number or `random`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SocArg {
    Fixed(f64),
    Random,
}

impl FromStr for SocArg {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        if s == "random" {
            return Ok(SocArg::Random);
        }
        s.parse::<f64>()
            .map(SocArg::Fixed)
            .map_err(|_| CliError::Config(format!("--soc must be a number or 'random', got {s:?}")))
    }
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Experiment configuration file (key = value sections); defaults apply
    /// when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Cycle source: a CSV path or `synth`.
    #[arg(long, default_value = "synth")]
    pub cycle: String,
    /// Concatenate the cycle this many times.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Speed unit of the cycle file: kmh or ms.
    #[arg(long, default_value = "ms")]
    pub unit: String,
    /// Seed for the bundled synthetic cycle.
    #[arg(long, default_value_t = 0)]
    pub synth_seed: u64,
    /// Output directory; overrides PHEV_EMS_OUT.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed for everything stochastic in the command.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// `cdcs` or a path to an agent checkpoint.
    #[arg(long, default_value = "cdcs")]
    pub controller: String,
    /// Initial state of charge: number or `random`.
    #[arg(long, default_value = "0.8")]
    pub soc: SocArg,
}

#[derive(Args, Debug)]
pub struct DpArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value = "0.8")]
    pub soc: SocArg,
    /// Override the state-of-charge grid size.
    #[arg(long)]
    pub soc_points: Option<usize>,
    /// Override the torque grid size.
    #[arg(long)]
    pub torque_points: Option<usize>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Environment steps to run.
    #[arg(long, default_value_t = 170_000)]
    pub steps: u64,
    /// Write an intermediate checkpoint every N steps (0 = final only).
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: u64,
    /// Continue from an existing checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Trained agent checkpoint.
    #[arg(long)]
    pub agent: PathBuf,
    #[arg(long, default_value = "0.8")]
    pub soc: SocArg,
    #[arg(long)]
    pub soc_points: Option<usize>,
    #[arg(long)]
    pub torque_points: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CycleInfoArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

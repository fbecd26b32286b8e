//! Command-line definition.

use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand};
use serde::Serialize;

use crate::commands::clr::ClrArgs;
use crate::commands::evaluate::EvaluateArgs;
use crate::commands::fit::FitArgs;
use crate::commands::path::PathArgs;
use crate::commands::simulate::SimulateArgs;
use crate::commands::stars::StarsArgs;
use crate::io::Format;

#[derive(Debug, Parser)]
#[command(name = "mglasso", version, about = "Multiscale graphical lasso")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct GlobalArgs {
    /// TOML or JSON file with global keys and per-command sections.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for replicate loops (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    /// Format of tabular outputs.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Log more (repeat for debug output).
    #[arg(short, long, global = true, action = ArgAction::Count)]
    #[serde(skip)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a ground-truth graph and Gaussian data.
    Simulate(SimulateArgs),
    /// Solve at a single (lambda1, lambda2).
    Fit(FitArgs),
    /// Compute the clustering path over increasing lambda2.
    Path(PathArgs),
    /// Select lambda1 by stability selection.
    Stars(StarsArgs),
    /// Compare graphs or partitions, or run a simulated ROC study.
    Evaluate(EvaluateArgs),
    /// Filter a count table and apply the centered log-ratio transform.
    Clr(ClrArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Fit(_) => "fit",
            Command::Path(_) => "path",
            Command::Stars(_) => "stars",
            Command::Evaluate(_) => "evaluate",
            Command::Clr(_) => "clr",
        }
    }
}

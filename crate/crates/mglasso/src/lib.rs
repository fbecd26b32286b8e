//! Files, configuration and the command line for the multiscale graphical
//! lasso. Numerical work is done by `mglasso-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod clr;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod io;
pub mod manifest;

use std::path::PathBuf;

pub use error::{CliError, Result};

use cli::{Cli, Command};
use commands::Context;
use config::{resolve_global, ConfigFile};

/// Runs a parsed command line and returns the paths written.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let file = cli.global.config.as_deref().map(ConfigFile::load).transpose()?;
    let global = resolve_global(file.as_ref(), &cli.global)?;
    let ctx = Context { global, file };
    log::info!("running {}", cli.command.name());
    match &cli.command {
        Command::Simulate(a) => commands::simulate::run(&ctx, a),
        Command::Fit(a) => commands::fit::run(&ctx, a),
        Command::Path(a) => commands::path::run(&ctx, a),
        Command::Stars(a) => commands::stars::run(&ctx, a),
        Command::Evaluate(a) => commands::evaluate::run(&ctx, a),
        Command::Clr(a) => commands::clr::run(&ctx, a),
    }
}

//! Command implementations. Each resolves its parameters, does the work and
//! writes its outputs plus `manifest.json` into the output directory.

pub mod clr;
pub mod evaluate;
pub mod fit;
pub mod path;
pub mod simulate;
pub mod stars;

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use mglasso_core::{DataMatrix, EdgeRule, Scaling, SolverConfig};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::{resolve, ConfigFile, Global};
use crate::error::{CliError, Result};
use crate::io::read_matrix;
use crate::manifest::Recorder;

/// Resolved global settings plus the optional config file.
#[derive(Debug, Clone)]
pub struct Context {
    pub global: Global,
    pub file: Option<ConfigFile>,
}

impl Context {
    pub fn section(&self, command: &str) -> Option<&Map<String, Value>> {
        self.file.as_ref().and_then(|f| f.section(command))
    }

    pub fn params<P, F>(&self, command: &str, defaults: &P, flags: &F) -> Result<P>
    where
        P: Serialize + serde::de::DeserializeOwned,
        F: Serialize,
    {
        resolve(command, defaults, self.section(command), flags)
    }

    pub fn out_dir(&self) -> &Path {
        &self.global.output_dir
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.global.threads)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {} threads: {e}", self.global.threads)))
    }

    /// A recorder whose config echo holds the globals and `params`.
    pub fn recorder<P: Serialize>(&self, command: &str, params: &P) -> Recorder {
        let config = serde_json::json!({
            "global": self.global,
            command: params,
        });
        Recorder::new(command, self.global.seed, config)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ScalingArg {
    None,
    #[default]
    UnitNorm,
    UnitVariance,
}

impl From<ScalingArg> for Scaling {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::None => Scaling::None,
            ScalingArg::UnitNorm => Scaling::UnitNorm,
            ScalingArg::UnitVariance => Scaling::UnitVariance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum RuleArg {
    And,
    #[default]
    Or,
}

impl From<RuleArg> for EdgeRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::And => EdgeRule::And,
            RuleArg::Or => EdgeRule::Or,
        }
    }
}

/// Solver settings as they appear in parameter sets.
pub fn solver_config(eps: f64, relative: bool, max_outer: usize, max_inner: usize) -> Result<SolverConfig> {
    let cfg = SolverConfig {
        eps_target: eps,
        relative,
        max_outer,
        max_inner,
        ..SolverConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn required<T: Clone>(command: &str, name: &str, v: &Option<T>) -> Result<T> {
    v.clone()
        .ok_or_else(|| CliError::Config(format!("{command}.{name}: missing required parameter `{name}`")))
}

/// Input data as read and as standardized.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub names: Vec<String>,
    pub raw: DataMatrix,
    pub standardized: DataMatrix,
}

pub fn load_data(path: &Path, scaling: ScalingArg) -> Result<Loaded> {
    let m = read_matrix(path)?;
    if m.values.nrows() < 2 {
        return Err(CliError::data(path, "at least two observations are required"));
    }
    if m.values.ncols() < 2 {
        return Err(CliError::data(path, "at least two variables are required"));
    }
    let names = m.names;
    let raw = DataMatrix::new(m.values)
        .and_then(|d| d.with_column_names(names.clone()))
        .map_err(|e| CliError::data(path, e.to_string()))?;
    let standardized = raw
        .standardize(scaling.into())
        .map_err(|e| CliError::from_core(e, Some(&names)))?;
    Ok(Loaded {
        names,
        raw,
        standardized,
    })
}

pub(crate) fn core_err(names: &[String]) -> impl Fn(mglasso_core::Error) -> CliError + '_ {
    move |e| CliError::from_core(e, Some(names))
}

pub(crate) fn record_outputs(rec: &mut Recorder, paths: &[PathBuf]) -> Result<()> {
    for p in paths {
        rec.output(p)?;
    }
    Ok(())
}

/// Records outputs, writes the manifest and returns every path written.
pub(crate) fn finish(ctx: &Context, mut rec: Recorder, mut paths: Vec<PathBuf>) -> Result<Vec<PathBuf>> {
    record_outputs(&mut rec, &paths)?;
    paths.push(rec.finish(ctx.out_dir())?);
    Ok(paths)
}

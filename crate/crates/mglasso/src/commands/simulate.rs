//! `simulate`: ground truth and Gaussian data from a graph model.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use mglasso_core::{GraphModel, SimConfig};
use serde::{Deserialize, Serialize};

use super::Context;
use crate::error::{CliError, Result};
use crate::formats::TruthDoc;
use crate::io::{write_json, Table};
use crate::manifest::MANIFEST_FILE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Sbm,
    ErdosRenyi,
    ScaleFree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateParams {
    pub model: ModelKind,
    pub p: usize,
    pub n: usize,
    /// Block proportions (block model).
    pub pi: Option<Vec<f64>>,
    pub alpha_in: f64,
    pub alpha_out: f64,
    /// Within-block correlation (block model).
    pub rho: f64,
    /// Edge density (Erdős–Rényi).
    pub alpha: f64,
    /// Edge count (scale-free); defaults to `p − 1`.
    pub num_edges: Option<usize>,
}

impl Default for SimulateParams {
    fn default() -> Self {
        SimulateParams {
            model: ModelKind::Sbm,
            p: 40,
            n: 80,
            pi: None,
            alpha_in: 0.75,
            alpha_out: 0.01,
            rho: 0.3,
            alpha: 0.1,
            num_edges: None,
        }
    }
}

impl SimulateParams {
    pub fn to_config(&self, seed: u64) -> Result<SimConfig> {
        let model = match self.model {
            ModelKind::Sbm => GraphModel::StochasticBlock {
                pi: self
                    .pi
                    .clone()
                    .ok_or_else(|| CliError::Config("simulate.pi: pi required for SBM".into()))?,
                alpha_in: self.alpha_in,
                alpha_out: self.alpha_out,
            },
            ModelKind::ErdosRenyi => GraphModel::ErdosRenyi { alpha: self.alpha },
            ModelKind::ScaleFree => GraphModel::ScaleFree {
                num_edges: self.num_edges.unwrap_or(self.p.saturating_sub(1)),
            },
        };
        let cfg = SimConfig {
            p: self.p,
            n: self.n,
            model,
            rho: self.rho,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated block proportions.
    #[arg(long, value_delimiter = ',')]
    pub pi: Option<Vec<f64>>,
    #[arg(long)]
    pub alpha_in: Option<f64>,
    #[arg(long)]
    pub alpha_out: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub num_edges: Option<usize>,
}

pub fn names(p: usize) -> Vec<String> {
    (1..=p).map(|k| format!("V{k}")).collect()
}

pub fn run(ctx: &Context, args: &SimulateArgs) -> Result<Vec<PathBuf>> {
    let params: SimulateParams = ctx.params("simulate", &SimulateParams::default(), args)?;
    let cfg = params.to_config(ctx.global.seed)?;
    let mut rec = ctx.recorder("simulate", &params);
    let (truth, data) = cfg.generate()?;
    rec.stage("generate");
    let dir = ctx.out_dir();
    let names = names(cfg.p);
    let fmt = ctx.global.format;
    let data_path = Table::from_matrix(&names, data.values()).write(dir, "data", fmt)?;
    let omega_path = Table::from_matrix(&names, &truth.precision).write(dir, "omega", fmt)?;
    let truth_path = dir.join("truth.json");
    write_json(&truth_path, &TruthDoc::new(&truth, cfg.model.name(), &names, MANIFEST_FILE))?;
    rec.result("truth_edges", truth.support().edge_count());
    rec.stage("write");
    super::finish(ctx, rec, vec![data_path, truth_path, omega_path])
}

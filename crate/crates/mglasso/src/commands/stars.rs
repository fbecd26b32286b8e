//! `stars`: stability-based choice of the sparsity weight `λ₁`.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use mglasso_core::neighborhood::Neighborhood;
use mglasso_core::solver::MgLasso;
use mglasso_core::stars::{lambda1_max, log_grid, replicate_graphs, select_from_replicates};
use mglasso_core::{DataMatrix, Graph, GraphEstimator, SolverConfig, StarsConfig, StarsSelection};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{core_err, load_data, required, solver_config, Context, Loaded, RuleArg, ScalingArg};
use crate::error::{CliError, Result};
use crate::io::{write_json, Cell, Table};
use crate::manifest::MANIFEST_FILE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    Mb,
    Mglasso,
}

/// Selection settings shared by `stars` and `path --stars`.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub subsamples: usize,
    pub subsample_size: Option<usize>,
    pub threshold: f64,
    pub grid_size: usize,
    pub grid_ratio: f64,
    pub replace: bool,
    pub estimator: Estimator,
    pub lambda2: f64,
}

impl Selection {
    pub fn config(&self, data: &Loaded, scaling: ScalingArg, rule: RuleArg, tol: f64, seed: u64) -> Result<StarsConfig> {
        if !(self.grid_ratio > 0.0 && self.grid_ratio < 1.0) {
            return Err(CliError::Config("grid_ratio must lie in (0, 1)".into()));
        }
        let x = &data.standardized;
        let mut cfg = StarsConfig::default_for(x);
        cfg.lambda1_grid = log_grid(lambda1_max(x), self.grid_ratio, self.grid_size);
        cfg.num_subsamples = self.subsamples;
        if let Some(b) = self.subsample_size {
            cfg.subsample_size = b;
        }
        cfg.instability_threshold = self.threshold;
        cfg.seed = seed;
        cfg.with_replacement = self.replace;
        cfg.scaling = scaling.into();
        cfg.rule = rule.into();
        cfg.tol = tol;
        cfg.validate(x.n())?;
        Ok(cfg)
    }

    pub fn estimator(&self, solver: SolverConfig) -> Box<dyn GraphEstimator + Sync> {
        match self.estimator {
            Estimator::Mb => Box::new(Neighborhood::default()),
            Estimator::Mglasso => Box::new(MgLasso::new(self.lambda2, solver)),
        }
    }
}

/// Fits the subsamples in parallel on `pool` and selects `λ₁`.
pub fn select(
    pool: &rayon::ThreadPool,
    raw: &DataMatrix,
    cfg: &StarsConfig,
    estimator: &(dyn GraphEstimator + Sync),
) -> mglasso_core::Result<StarsSelection> {
    let replicates: Vec<Option<Vec<Graph>>> = pool.install(|| {
        (0..cfg.num_subsamples)
            .into_par_iter()
            .map(|r| match replicate_graphs(raw, cfg, estimator, r) {
                Ok(g) => Some(g),
                Err(e) => {
                    log::warn!("subsample {r} failed: {e}");
                    None
                }
            })
            .collect()
    });
    select_from_replicates(raw.p(), cfg, &replicates)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarsParams {
    pub data: Option<PathBuf>,
    pub scaling: ScalingArg,
    pub rule: RuleArg,
    pub tol: f64,
    pub subsamples: usize,
    /// Defaults to `min(⌊10√n⌋, n − 1)`.
    pub subsample_size: Option<usize>,
    pub threshold: f64,
    pub grid_size: usize,
    /// Smallest grid value as a fraction of `λ₁,max`.
    pub grid_ratio: f64,
    pub replace: bool,
    pub estimator: Estimator,
    pub lambda2: f64,
    pub eps: f64,
    pub relative: bool,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for StarsParams {
    fn default() -> Self {
        StarsParams {
            data: None,
            scaling: ScalingArg::UnitNorm,
            rule: RuleArg::Or,
            tol: 1e-8,
            subsamples: 20,
            subsample_size: None,
            threshold: 0.05,
            grid_size: 30,
            grid_ratio: 0.01,
            replace: false,
            estimator: Estimator::Mb,
            lambda2: 0.0,
            eps: 1e-6,
            relative: true,
            max_outer: 50,
            max_inner: 10_000,
        }
    }
}

impl StarsParams {
    pub fn selection(&self) -> Selection {
        Selection {
            subsamples: self.subsamples,
            subsample_size: self.subsample_size,
            threshold: self.threshold,
            grid_size: self.grid_size,
            grid_ratio: self.grid_ratio,
            replace: self.replace,
            estimator: self.estimator,
            lambda2: self.lambda2,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct StarsArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub scaling: Option<ScalingArg>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub subsamples: Option<usize>,
    #[arg(long)]
    pub subsample_size: Option<usize>,
    /// Instability threshold in (0, 0.5].
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub grid_ratio: Option<f64>,
    /// Bootstrap rows instead of subsampling.
    #[arg(long)]
    pub replace: Option<bool>,
    #[arg(long, value_enum)]
    pub estimator: Option<Estimator>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub relative: Option<bool>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub max_inner: Option<usize>,
}

#[derive(Debug, Serialize)]
struct SelectionDoc<'a> {
    manifest: &'a str,
    lambda1: f64,
    index: usize,
    /// False when no grid value met the threshold and the sparsest was kept.
    selected: bool,
    threshold: f64,
    replicates_used: usize,
    failed_replicates: usize,
}

pub fn run(ctx: &Context, args: &StarsArgs) -> Result<Vec<PathBuf>> {
    let params: StarsParams = ctx.params("stars", &StarsParams::default(), args)?;
    let data_path = required("stars", "data", &params.data)?;
    let solver = solver_config(params.eps, params.relative, params.max_outer, params.max_inner)?;
    let mut rec = ctx.recorder("stars", &params);
    rec.input(&data_path)?;
    let data = load_data(&data_path, params.scaling)?;
    rec.stage("read");
    let sel_params = params.selection();
    let cfg = sel_params.config(&data, params.scaling, params.rule, params.tol, ctx.global.seed)?;
    let estimator = sel_params.estimator(solver);
    let sel = select(&ctx.pool()?, &data.raw, &cfg, estimator.as_ref()).map_err(core_err(&data.names))?;
    rec.stage("select");

    let mut table = Table::new(vec!["lambda1".into(), "instability".into(), "monotonized".into()]);
    for k in 0..sel.lambda1_grid.len() {
        table.push(vec![
            Cell::Num(sel.lambda1_grid[k]),
            Cell::Num(sel.instabilities[k]),
            Cell::Num(sel.monotonized[k]),
        ]);
    }
    let dir = ctx.out_dir();
    let table_path = table.write(dir, "stars", ctx.global.format)?;
    let sel_path = dir.join("selection.json");
    write_json(
        &sel_path,
        &SelectionDoc {
            manifest: MANIFEST_FILE,
            lambda1: sel.lambda1,
            index: sel.index,
            selected: sel.selected,
            threshold: cfg.instability_threshold,
            replicates_used: sel.replicates_used,
            failed_replicates: sel.failed_replicates,
        },
    )?;
    rec.result("lambda1", sel.lambda1);
    rec.stage("write");
    super::finish(ctx, rec, vec![table_path, sel_path])
}

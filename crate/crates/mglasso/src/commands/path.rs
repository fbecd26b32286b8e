//! `path`: the clustering path over increasing fusion weights.

use std::path::PathBuf;

use clap::Args;
use mglasso_core::{mglasso_path, PathConfig};
use serde::{Deserialize, Serialize};

use super::stars::{select, Estimator, Selection};
use super::{core_err, load_data, required, solver_config, Context, RuleArg, ScalingArg};
use crate::error::{CliError, Result};
use crate::formats::HierarchyDoc;
use crate::io::write_json;
use crate::manifest::MANIFEST_FILE;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathParams {
    pub data: Option<PathBuf>,
    pub lambda1: Option<f64>,
    /// Choose `λ₁` by stability selection (neighborhood selection fits).
    pub stars: bool,
    /// Defaults to `1e-3` times the data-driven fusion scale.
    pub lambda2_start: Option<f64>,
    pub kappa: f64,
    pub eps_fuse: f64,
    pub max_levels: usize,
    pub scaling: ScalingArg,
    pub rule: RuleArg,
    pub tol: f64,
    pub eps: f64,
    pub relative: bool,
    pub max_outer: usize,
    pub max_inner: usize,
    pub subsamples: usize,
    pub subsample_size: Option<usize>,
    pub threshold: f64,
    pub grid_size: usize,
    pub grid_ratio: f64,
}

impl Default for PathParams {
    fn default() -> Self {
        PathParams {
            data: None,
            lambda1: None,
            stars: false,
            lambda2_start: None,
            kappa: 1.3,
            eps_fuse: 1e-4,
            max_levels: 50,
            scaling: ScalingArg::UnitNorm,
            rule: RuleArg::Or,
            tol: 1e-8,
            eps: 1e-6,
            relative: true,
            max_outer: 50,
            max_inner: 10_000,
            subsamples: 20,
            subsample_size: None,
            threshold: 0.05,
            grid_size: 30,
            grid_ratio: 0.01,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct PathArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, conflicts_with = "stars")]
    pub lambda1: Option<f64>,
    /// Select lambda1 by StARS before running the path.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub stars: Option<bool>,
    #[arg(long)]
    pub lambda2_start: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub eps_fuse: Option<f64>,
    #[arg(long)]
    pub max_levels: Option<usize>,
    #[arg(long, value_enum)]
    pub scaling: Option<ScalingArg>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub relative: Option<bool>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub max_inner: Option<usize>,
    #[arg(long)]
    pub subsamples: Option<usize>,
    #[arg(long)]
    pub subsample_size: Option<usize>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub grid_ratio: Option<f64>,
}

pub fn run(ctx: &Context, args: &PathArgs) -> Result<Vec<PathBuf>> {
    let params: PathParams = ctx.params("path", &PathParams::default(), args)?;
    let data_path = required("path", "data", &params.data)?;
    if params.stars == params.lambda1.is_some() {
        return Err(CliError::Config("path: give exactly one of `lambda1` and `stars`".into()));
    }
    let solver = solver_config(params.eps, params.relative, params.max_outer, params.max_inner)?;
    let mut rec = ctx.recorder("path", &params);
    rec.input(&data_path)?;
    let data = load_data(&data_path, params.scaling)?;
    rec.stage("read");
    let x = &data.standardized;

    let lambda1 = match params.lambda1 {
        Some(l) => l,
        None => {
            let sel_params = Selection {
                subsamples: params.subsamples,
                subsample_size: params.subsample_size,
                threshold: params.threshold,
                grid_size: params.grid_size,
                grid_ratio: params.grid_ratio,
                replace: false,
                estimator: Estimator::Mb,
                lambda2: 0.0,
            };
            let cfg = sel_params.config(&data, params.scaling, params.rule, params.tol, ctx.global.seed)?;
            let est = sel_params.estimator(solver.clone());
            let sel = select(&ctx.pool()?, &data.raw, &cfg, est.as_ref()).map_err(core_err(&data.names))?;
            rec.result("stars_selected", sel.selected);
            rec.stage("stars");
            sel.lambda1
        }
    };
    rec.result("lambda1", lambda1);

    let mut cfg = PathConfig::default_for(x);
    if let Some(s) = params.lambda2_start {
        cfg.lambda2_start = s;
    }
    cfg.kappa = params.kappa;
    cfg.eps_fuse = params.eps_fuse;
    cfg.max_levels = params.max_levels;
    let hierarchy = mglasso_path(x, lambda1, &cfg, &solver).map_err(core_err(&data.names))?;
    let failed = hierarchy.levels.iter().filter(|l| !l.duality_gap.is_finite()).count();
    if failed > 0 {
        log::warn!("{failed} level(s) failed to solve and kept the previous coefficients");
    }
    rec.result("levels", hierarchy.levels.len());
    rec.result("lambda2_start", cfg.lambda2_start);
    rec.stage("path");

    let rule = params.rule.into();
    let doc = HierarchyDoc::new(&hierarchy, lambda1, &data.names, rule, params.tol, MANIFEST_FILE)?;
    let out = ctx.out_dir().join("hierarchy.json");
    write_json(&out, &doc)?;
    rec.stage("write");
    super::finish(ctx, rec, vec![out])
}

//! `evaluate`: edge confusion and partition agreement between files, or a
//! simulated ROC study.

use std::path::PathBuf;

use clap::Args;
use mglasso_core::evaluation::{per_pair_scale, replicate_rocs, summarize, RocExperiment};
use mglasso_core::stars::log_grid;
use mglasso_core::{adjusted_rand_index, confusion, NeighborhoodConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::simulate::SimulateParams;
use super::{solver_config, Context, RuleArg, ScalingArg};
use crate::error::{CliError, Result};
use crate::formats::{read_graph, read_partition};
use crate::io::{Cell, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateParams {
    /// Estimated graph (any document with `num_nodes` and `edges`).
    pub estimate: Option<PathBuf>,
    /// Reference graph, such as `truth.json` or another `graph.json`.
    pub truth: Option<PathBuf>,
    /// Documents with a `labels` array.
    pub partition: Option<PathBuf>,
    pub reference_partition: Option<PathBuf>,
    /// Level to read when a partition file is a hierarchy.
    pub clusters: Option<usize>,
    /// Run a ROC study on data drawn with the `simulate` settings.
    pub roc: bool,
    pub replications: usize,
    /// Nominal fusion weights, each multiplied by `lambda2_scale`.
    pub lambda2_values: Vec<f64>,
    /// Defaults to `1 / (p − 1)`.
    pub lambda2_scale: Option<f64>,
    /// Largest `λ₁` of the grid; defaults to `0.6 n` under unit-variance
    /// scaling and `0.6` otherwise.
    pub grid_max: Option<f64>,
    pub grid_size: usize,
    pub grid_ratio: f64,
    pub baseline: bool,
    pub scaling: ScalingArg,
    pub rule: RuleArg,
    pub tol: f64,
    pub eps: f64,
    pub relative: bool,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for EvaluateParams {
    fn default() -> Self {
        EvaluateParams {
            estimate: None,
            truth: None,
            partition: None,
            reference_partition: None,
            clusters: None,
            roc: false,
            replications: 10,
            lambda2_values: vec![0.0],
            lambda2_scale: None,
            grid_max: None,
            grid_size: 15,
            grid_ratio: 0.01,
            baseline: true,
            scaling: ScalingArg::UnitVariance,
            rule: RuleArg::Or,
            tol: 1e-8,
            eps: 1e-4,
            relative: true,
            max_outer: 50,
            max_inner: 10_000,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub estimate: Option<PathBuf>,
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub partition: Option<PathBuf>,
    #[arg(long)]
    pub reference_partition: Option<PathBuf>,
    /// With a `hierarchy.json` partition, compare the level nearest this many clusters.
    #[arg(long)]
    pub clusters: Option<usize>,
    /// ROC study using the `simulate` section of the config file.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub roc: Option<bool>,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Comma-separated nominal fusion weights.
    #[arg(long, value_delimiter = ',')]
    pub lambda2_values: Option<Vec<f64>>,
    #[arg(long)]
    pub lambda2_scale: Option<f64>,
    #[arg(long)]
    pub grid_max: Option<f64>,
    #[arg(long)]
    pub grid_size: Option<usize>,
    #[arg(long)]
    pub grid_ratio: Option<f64>,
    /// Also score neighborhood selection.
    #[arg(long)]
    pub baseline: Option<bool>,
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
}

fn metric_table() -> Table {
    Table::new(vec!["metric".into(), "value".into()])
}

pub fn run(ctx: &Context, args: &EvaluateArgs) -> Result<Vec<PathBuf>> {
    let params: EvaluateParams = ctx.params("evaluate", &EvaluateParams::default(), args)?;
    if params.roc {
        return roc(ctx, &params);
    }
    let graphs = match (&params.estimate, &params.truth) {
        (Some(e), Some(t)) => Some((e.clone(), t.clone())),
        (None, None) => None,
        _ => return Err(CliError::Config("evaluate: `estimate` and `truth` go together".into())),
    };
    let parts = match (&params.partition, &params.reference_partition) {
        (Some(a), Some(b)) => Some((a.clone(), b.clone())),
        (None, None) => None,
        _ => return Err(CliError::Config("evaluate: `partition` and `reference_partition` go together".into())),
    };
    if graphs.is_none() && parts.is_none() {
        return Err(CliError::Config(
            "evaluate: nothing to compare (give estimate and truth, partition and reference_partition, or roc)".into(),
        ));
    }
    let mut rec = ctx.recorder("evaluate", &params);
    let dir = ctx.out_dir();
    let fmt = ctx.global.format;
    let mut metrics = metric_table();
    let mut outputs = Vec::new();
    if let Some((e, t)) = graphs {
        rec.input(&e)?;
        rec.input(&t)?;
        let c = confusion(&read_graph(&e)?, &read_graph(&t)?)?;
        for (name, v) in [
            ("true_pos", c.true_pos),
            ("false_pos", c.false_pos),
            ("true_neg", c.true_neg),
            ("false_neg", c.false_neg),
        ] {
            metrics.push(vec![name.into(), Cell::from(v)]);
        }
        metrics.push(vec!["sensitivity".into(), c.sensitivity().into()]);
        metrics.push(vec!["specificity".into(), c.specificity().into()]);
        let mut table = Table::new(vec!["estimate".into(), "reference_non_edges".into(), "reference_edges".into()]);
        table.push(vec!["non_edges".into(), c.true_neg.into(), c.false_neg.into()]);
        table.push(vec!["edges".into(), c.false_pos.into(), c.true_pos.into()]);
        outputs.push(table.write(dir, "confusion", fmt)?);
    }
    if let Some((a, b)) = parts {
        rec.input(&a)?;
        rec.input(&b)?;
        let ari = adjusted_rand_index(&read_partition(&a, params.clusters)?, &read_partition(&b, params.clusters)?)?;
        metrics.push(vec!["ari".into(), ari.into()]);
    }
    rec.stage("compare");
    outputs.insert(0, metrics.write(dir, "metrics", fmt)?);
    super::finish(ctx, rec, outputs)
}

fn roc(ctx: &Context, params: &EvaluateParams) -> Result<Vec<PathBuf>> {
    let sim_params: SimulateParams = ctx.params("simulate", &SimulateParams::default(), &serde_json::json!({}))?;
    let sim = sim_params.to_config(ctx.global.seed)?;
    let grid_max = params.grid_max.unwrap_or(match params.scaling {
        ScalingArg::UnitVariance => 0.6 * sim.n as f64,
        _ => 0.6,
    });
    let exp = RocExperiment {
        lambda1_grid: log_grid(grid_max, params.grid_ratio, params.grid_size),
        lambda2_values: params.lambda2_values.clone(),
        lambda2_scale: params.lambda2_scale.unwrap_or(per_pair_scale(sim.p)),
        replications: params.replications,
        scaling: params.scaling.into(),
        rule: params.rule.into(),
        tol: params.tol,
        solver: solver_config(params.eps, params.relative, params.max_outer, params.max_inner)?,
        baseline: params.baseline.then(NeighborhoodConfig::default),
        sim,
    };
    exp.validate()?;
    let config = serde_json::json!({ "simulate": sim_params, "evaluate": params });
    let mut rec = ctx.recorder("evaluate", &config);
    let reps = ctx.pool()?.install(|| {
        (0..exp.replications)
            .into_par_iter()
            .map(|r| replicate_rocs(&exp, r))
            .collect::<mglasso_core::Result<Vec<_>>>()
    })?;
    let summary = summarize(&exp, &reps)?;
    rec.stage("replications");

    let mut curves: Vec<(String, &mglasso_core::AveragedRoc)> = summary
        .mglasso
        .iter()
        .map(|c| (format!("mglasso_{}", c.lambda2), c))
        .collect();
    if let Some(b) = &summary.baseline {
        curves.push(("mb".into(), b));
    }
    let mut columns = vec!["fpr".to_string()];
    columns.extend(curves.iter().map(|(name, _)| format!("tpr_{name}")));
    let mut roc_table = Table::new(columns);
    let fpr = &curves[0].1.fpr;
    for (k, &f) in fpr.iter().enumerate() {
        let mut row = vec![Cell::Num(f)];
        row.extend(curves.iter().map(|(_, c)| Cell::Num(c.mean_tpr[k])));
        roc_table.push(row);
    }
    let mut auc = Table::new(vec![
        "estimator".into(),
        "lambda2".into(),
        "auc_mean".into(),
        "auc_sd".into(),
        "replications".into(),
    ]);
    for (name, c) in &curves {
        let est = if name == "mb" { "mb" } else { "mglasso" };
        auc.push(vec![
            est.into(),
            c.lambda2.into(),
            c.auc_mean.into(),
            c.auc_sd.into(),
            c.replications.into(),
        ]);
    }
    let dir = ctx.out_dir();
    let fmt = ctx.global.format;
    let outputs = vec![roc_table.write(dir, "roc", fmt)?, auc.write(dir, "auc", fmt)?];
    rec.stage("write");
    super::finish(ctx, rec, outputs)
}

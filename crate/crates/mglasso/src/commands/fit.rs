//! `fit`: one penalized solve at fixed `(λ₁, λ₂)`.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use mglasso_core::model::variable_at;
use mglasso_core::neighborhood::Neighborhood;
use mglasso_core::solver::MgLasso;
use mglasso_core::{graph_from_beta, objective_value, GraphEstimator, Hyperparameters};
use serde::{Deserialize, Serialize};

use super::{core_err, load_data, required, solver_config, Context, RuleArg, ScalingArg};
use crate::error::{CliError, Result};
use crate::formats::{rule_name, FittedGraph, GraphDoc};
use crate::io::{write_json, Cell, Table};
use crate::manifest::MANIFEST_FILE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Mode {
    /// Lasso plus fusion penalty.
    #[default]
    Mglasso,
    /// Plain neighborhood selection (separate lasso regressions).
    Mb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitParams {
    pub data: Option<PathBuf>,
    pub lambda1: Option<f64>,
    pub lambda2: f64,
    pub mode: Mode,
    pub scaling: ScalingArg,
    pub rule: RuleArg,
    /// Coefficients at or below this magnitude count as zero.
    pub tol: f64,
    pub eps: f64,
    pub relative: bool,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams {
            data: None,
            lambda1: None,
            lambda2: 0.0,
            mode: Mode::Mglasso,
            scaling: ScalingArg::UnitNorm,
            rule: RuleArg::Or,
            tol: 1e-8,
            eps: 1e-6,
            relative: true,
            max_outer: 50,
            max_inner: 10_000,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct FitArgs {
    /// Input CSV (header row, one column per variable).
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub lambda1: Option<f64>,
    #[arg(long)]
    pub lambda2: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum)]
    pub scaling: Option<ScalingArg>,
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Duality-gap target.
    #[arg(long)]
    pub eps: Option<f64>,
    /// Whether `eps` is relative to the objective at zero.
    #[arg(long)]
    pub relative: Option<bool>,
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long)]
    pub max_inner: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Diagnostics {
    manifest: String,
    mode: Mode,
    lambda1: f64,
    lambda2: f64,
    lambda1_max: f64,
    objective: f64,
    duality_gap: f64,
    iterations: usize,
    outer_iterations: usize,
    converged: bool,
    /// `slot_map[i][k]` names the variable whose coefficient is in column
    /// `slot_{k+1}` of row `i` of the beta table.
    slot_map: Vec<Vec<String>>,
}

pub fn run(ctx: &Context, args: &FitArgs) -> Result<Vec<PathBuf>> {
    let params: FitParams = ctx.params("fit", &FitParams::default(), args)?;
    let data_path = required("fit", "data", &params.data)?;
    let lambda1 = required("fit", "lambda1", &params.lambda1)?;
    let solver = solver_config(params.eps, params.relative, params.max_outer, params.max_inner)?;
    if params.mode == Mode::Mb && params.lambda2 != 0.0 {
        return Err(CliError::Config("fit.lambda2: must be 0 in mb mode".into()));
    }
    let hp = Hyperparameters::new(lambda1, params.lambda2)?;

    let mut rec = ctx.recorder("fit", &params);
    rec.input(&data_path)?;
    let data = load_data(&data_path, params.scaling)?;
    rec.stage("read");
    let x = &data.standardized;
    let estimator: Box<dyn GraphEstimator> = match params.mode {
        Mode::Mglasso => Box::new(MgLasso::new(params.lambda2, solver)),
        Mode::Mb => Box::new(Neighborhood::default()),
    };
    let (beta, diag) = estimator.fit(x, lambda1, None).map_err(core_err(&data.names))?;
    if !diag.converged {
        log::warn!("solver stopped before reaching the gap target (gap {:e})", diag.final_duality_gap);
    }
    rec.stage("solve");

    let p = x.p();
    let names = &data.names;
    let mut columns = vec!["variable".to_string()];
    columns.extend((1..p).map(|k| format!("slot_{k}")));
    let mut table = Table::new(columns);
    for (i, name) in names.iter().enumerate() {
        let mut row = vec![Cell::from(name.as_str())];
        row.extend(beta.row(i).iter().map(|&v| Cell::Num(v)));
        table.push(row);
    }
    let dir = ctx.out_dir();
    let beta_path = table.write(dir, "beta", ctx.global.format)?;

    let rule = params.rule.into();
    let graph = graph_from_beta(&beta, rule, params.tol);
    let graph_path = dir.join("graph.json");
    write_json(
        &graph_path,
        &FittedGraph {
            manifest: MANIFEST_FILE.into(),
            rule: rule_name(rule).into(),
            tol: params.tol,
            graph: GraphDoc::new(&graph, names),
        },
    )?;
    let diagnostics = Diagnostics {
        manifest: MANIFEST_FILE.into(),
        mode: params.mode,
        lambda1,
        lambda2: params.lambda2,
        lambda1_max: mglasso_core::stars::lambda1_max(x),
        objective: objective_value(&beta, x, &hp)?,
        duality_gap: diag.final_duality_gap,
        iterations: diag.iterations,
        outer_iterations: diag.outer_iterations,
        converged: diag.converged,
        slot_map: (0..p)
            .map(|i| (0..p - 1).map(|s| names[variable_at(i, s)].clone()).collect())
            .collect(),
    };
    let diag_path = dir.join("diagnostics.json");
    write_json(&diag_path, &diagnostics)?;
    rec.result("edges", graph.edge_count());
    rec.stage("write");
    super::finish(ctx, rec, vec![beta_path, graph_path, diag_path])
}

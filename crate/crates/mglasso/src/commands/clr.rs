//! `clr`: filter a count table and apply the centered log-ratio transform.

use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use super::{required, Context};
use crate::clr::{clr_transform, filter, ClrFilter};
use crate::error::{CliError, Result};
use crate::io::{read_matrix, Table};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClrParams {
    /// Count CSV: one row per sample, one column per feature.
    pub data: Option<PathBuf>,
    pub pseudocount: f64,
    pub min_depth: f64,
    pub min_prevalence: f64,
}

impl Default for ClrParams {
    fn default() -> Self {
        ClrParams {
            data: None,
            pseudocount: 1.0,
            min_depth: 0.0,
            min_prevalence: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, Args, Serialize)]
pub struct ClrArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub pseudocount: Option<f64>,
    /// Drop samples whose total count is below this.
    #[arg(long)]
    pub min_depth: Option<f64>,
    /// Drop features present in less than this fraction of the kept samples.
    #[arg(long)]
    pub min_prevalence: Option<f64>,
}

pub fn run(ctx: &Context, args: &ClrArgs) -> Result<Vec<PathBuf>> {
    let params: ClrParams = ctx.params("clr", &ClrParams::default(), args)?;
    let path = required("clr", "data", &params.data)?;
    let mut rec = ctx.recorder("clr", &params);
    rec.input(&path)?;
    let m = read_matrix(&path)?;
    rec.stage("read");
    let kept = filter(
        &m.values,
        &ClrFilter {
            min_depth: params.min_depth,
            min_prevalence: params.min_prevalence,
        },
    )
    .map_err(|e| match e {
        CliError::Mismatch(msg) => CliError::data(&path, msg),
        other => other,
    })?;
    let y = clr_transform(&kept.counts, params.pseudocount)?;
    let names: Vec<String> = kept.columns.iter().map(|&c| m.names[c].clone()).collect();
    rec.result("samples_kept", kept.rows.len());
    rec.result("samples_dropped", m.values.nrows() - kept.rows.len());
    rec.result("features_kept", kept.columns.len());
    rec.result("features_dropped", m.values.ncols() - kept.columns.len());
    rec.stage("transform");
    let out = Table::from_matrix(&names, &y).write(ctx.out_dir(), "clr", ctx.global.format)?;
    super::finish(ctx, rec, vec![out])
}

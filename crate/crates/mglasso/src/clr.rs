//! Centered log-ratio transform of count tables, with sample and feature
//! filters.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClrFilter {
    /// Samples whose total count is below this are dropped first.
    pub min_depth: f64,
    /// Features nonzero in less than this fraction of the kept samples are
    /// then dropped.
    pub min_prevalence: f64,
}

impl Default for ClrFilter {
    fn default() -> Self {
        ClrFilter {
            min_depth: 0.0,
            min_prevalence: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub rows: Vec<usize>,
    pub columns: Vec<usize>,
    pub counts: DMatrix<f64>,
}

fn check_counts(counts: &DMatrix<f64>) -> Result<()> {
    if let Some((k, v)) = counts.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        let (r, c) = (k % counts.nrows(), k / counts.nrows());
        return Err(CliError::Mismatch(format!(
            "counts must be nonnegative (row {}, column {} holds {v})",
            r + 1,
            c + 1
        )));
    }
    Ok(())
}

pub fn filter(counts: &DMatrix<f64>, f: &ClrFilter) -> Result<Filtered> {
    check_counts(counts)?;
    if !(0.0..=1.0).contains(&f.min_prevalence) {
        return Err(CliError::Config("min_prevalence must lie in [0, 1]".into()));
    }
    if !(f.min_depth >= 0.0) {
        return Err(CliError::Config("min_depth must be nonnegative".into()));
    }
    let rows: Vec<usize> = (0..counts.nrows())
        .filter(|&r| counts.row(r).sum() >= f.min_depth)
        .collect();
    let columns: Vec<usize> = (0..counts.ncols())
        .filter(|&c| {
            let present = rows.iter().filter(|&&r| counts[(r, c)] > 0.0).count();
            !rows.is_empty() && present as f64 >= f.min_prevalence * rows.len() as f64
        })
        .collect();
    if rows.is_empty() || columns.is_empty() {
        return Err(CliError::Mismatch(format!(
            "filters leave {} samples and {} features",
            rows.len(),
            columns.len()
        )));
    }
    let sub = DMatrix::from_fn(rows.len(), columns.len(), |r, c| counts[(rows[r], columns[c])]);
    Ok(Filtered {
        rows,
        columns,
        counts: sub,
    })
}

/// `y = log(x + pseudo)` centered within each row.
pub fn clr_transform(counts: &DMatrix<f64>, pseudo: f64) -> Result<DMatrix<f64>> {
    if !(pseudo > 0.0) || !pseudo.is_finite() {
        return Err(CliError::Config("pseudocount must be positive".into()));
    }
    check_counts(counts)?;
    let mut y = counts.map(|v| (v + pseudo).ln());
    for mut row in y.row_iter_mut() {
        let mean = row.mean();
        row.add_scalar_mut(-mean);
    }
    Ok(y)
}

//! Stability-based selection of the sparsity weight.
//!
//! Graphs are re-estimated on `N` random subsamples for every value of a
//! decreasing `λ₁` grid. The fraction of subsamples containing an edge gives
//! `θ̂_st`; the total instability `D̂ = Σ_{s<t} 2θ̂(1 − θ̂) / C(p, 2)` is made
//! monotone along the grid and the selection is the densest model whose
//! instability stays under the threshold.

use alloc::vec;
use alloc::vec::Vec;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::model::{graph_from_beta, DataMatrix, EdgeRule, Graph, RegressionMatrix, Scaling};
use crate::objective::QuadraticLoss;
use crate::solver::GraphEstimator;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StarsConfig {
    /// Strictly decreasing sparsity weights.
    pub lambda1_grid: Vec<f64>,
    pub num_subsamples: usize,
    pub subsample_size: usize,
    /// Instability threshold in `(0, 0.5]`.
    pub instability_threshold: f64,
    pub seed: u64,
    /// Draw rows with replacement (bootstrap) instead of subsampling.
    pub with_replacement: bool,
    /// Standardization applied to every subsample before fitting.
    pub scaling: Scaling,
    pub rule: EdgeRule,
    pub tol: f64,
}

impl StarsConfig {
    /// 20 subsamples of size `min(⌊10√n⌋, n − 1)`, threshold 0.05, and 30
    /// log-spaced values from `λ₁,max` down to `0.01 λ₁,max`.
    pub fn default_for(x: &DataMatrix) -> Self {
        let n = x.n();
        let b = usize::min(libm::floor(10.0 * libm::sqrt(n as f64)) as usize, n - 1).max(2);
        StarsConfig {
            lambda1_grid: log_grid(lambda1_max(x), 0.01, 30),
            num_subsamples: 20,
            subsample_size: b,
            instability_threshold: 0.05,
            seed: 0,
            with_replacement: false,
            scaling: Scaling::UnitNorm,
            rule: EdgeRule::Or,
            tol: 1e-8,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.lambda1_grid.is_empty()
            || self.lambda1_grid.windows(2).any(|w| !(w[0] > w[1]))
            || self.lambda1_grid.iter().any(|l| !(*l >= 0.0))
        {
            return Err(Error::DegenerateGrid);
        }
        if self.num_subsamples == 0 {
            return Err(Error::param("num_subsamples", "must be positive"));
        }
        if self.subsample_size < 2 || (!self.with_replacement && self.subsample_size >= n) {
            return Err(Error::param("subsample_size", "must satisfy 2 <= b < n"));
        }
        if !(self.instability_threshold > 0.0 && self.instability_threshold <= 0.5) {
            return Err(Error::param("instability_threshold", "must lie in (0, 0.5]"));
        }
        Ok(())
    }
}

/// Smallest `λ₁` for which every nodewise regression is exactly zero:
/// `maxᵢ ‖(X^{∖i})ᵀXⁱ‖∞`.
pub fn lambda1_max(x: &DataMatrix) -> f64 {
    let loss = QuadraticLoss::new(x);
    loss.cross().iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `count` log-spaced values from `max` down to `ratio · max`.
pub fn log_grid(max: f64, ratio: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![max],
        _ => {
            let step = libm::log(ratio) / (count - 1) as f64;
            (0..count).map(|k| max * libm::exp(step * k as f64)).collect()
        }
    }
}

/// Row indices of subsample `replicate`. The stream depends only on
/// `(seed, replicate)`, so replicates can be drawn in any order.
pub fn subsample_rows(n: usize, size: usize, seed: u64, replicate: u64, with_replacement: bool) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    if with_replacement {
        (0..size).map(|_| rng.random_range(0..n)).collect()
    } else {
        let mut rows = index::sample(&mut rng, n, size).into_vec();
        rows.sort_unstable();
        rows
    }
}

/// Graphs estimated on subsample `replicate`, one per grid value (fitted from
/// the largest `λ₁` down with warm starts).
pub fn replicate_graphs<E: GraphEstimator + ?Sized>(
    x: &DataMatrix,
    cfg: &StarsConfig,
    estimator: &E,
    replicate: usize,
) -> Result<Vec<Graph>> {
    let rows = subsample_rows(x.n(), cfg.subsample_size, cfg.seed, replicate as u64, cfg.with_replacement);
    let sub = x.select_rows(&rows)?.standardize(cfg.scaling)?;
    let mut warm: Option<RegressionMatrix> = None;
    let mut graphs = Vec::with_capacity(cfg.lambda1_grid.len());
    for &lambda1 in &cfg.lambda1_grid {
        let (beta, _) = estimator.fit(&sub, lambda1, warm.as_ref())?;
        graphs.push(graph_from_beta(&beta, cfg.rule, cfg.tol));
        warm = Some(beta);
    }
    Ok(graphs)
}

/// Empirical edge frequencies over the subsamples that could be fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFrequencies {
    pub p: usize,
    /// Row-major `p × p`, symmetric, zero diagonal.
    pub theta: Vec<f64>,
    pub used: usize,
    pub failed: usize,
}

impl EdgeFrequencies {
    pub fn from_graphs<'a>(p: usize, graphs: impl IntoIterator<Item = Option<&'a Graph>>) -> Self {
        let mut counts = vec![0usize; p * p];
        let (mut used, mut failed) = (0, 0);
        for g in graphs {
            match g {
                Some(g) => {
                    used += 1;
                    for (i, j) in g.edges() {
                        counts[i * p + j] += 1;
                        counts[j * p + i] += 1;
                    }
                }
                None => failed += 1,
            }
        }
        let theta = counts
            .iter()
            .map(|&c| if used > 0 { c as f64 / used as f64 } else { 0.0 })
            .collect();
        EdgeFrequencies {
            p,
            theta,
            used,
            failed,
        }
    }

    pub fn get(&self, s: usize, t: usize) -> f64 {
        self.theta[s * self.p + t]
    }
}

/// Edge appearance frequencies at a single `λ₁`; subsamples whose fit fails
/// are skipped and counted.
pub fn edge_probabilities<E: GraphEstimator + ?Sized>(
    x: &DataMatrix,
    lambda1: f64,
    cfg: &StarsConfig,
    estimator: &E,
) -> Result<EdgeFrequencies> {
    let single = StarsConfig {
        lambda1_grid: vec![lambda1],
        ..cfg.clone()
    };
    single.validate(x.n())?;
    let graphs: Vec<Option<Graph>> = (0..cfg.num_subsamples)
        .map(|r| replicate_graphs(x, &single, estimator, r).ok().and_then(|mut g| g.pop()))
        .collect();
    Ok(EdgeFrequencies::from_graphs(x.p(), graphs.iter().map(Option::as_ref)))
}

/// Total instability `Σ_{s<t} 2θ̂_st(1 − θ̂_st) / C(p, 2)`, in `[0, 0.5]`.
pub fn instability(freq: &EdgeFrequencies) -> f64 {
    let p = freq.p;
    if p < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for s in 0..p {
        for t in s + 1..p {
            let th = freq.get(s, t);
            total += 2.0 * th * (1.0 - th);
        }
    }
    total / (p * (p - 1) / 2) as f64
}

/// Outcome of stability selection.
#[derive(Debug, Clone, PartialEq)]
pub struct StarsSelection {
    pub lambda1: f64,
    pub index: usize,
    pub lambda1_grid: Vec<f64>,
    pub instabilities: Vec<f64>,
    /// Running maximum of the instabilities along the decreasing grid.
    pub monotonized: Vec<f64>,
    /// False when no grid value met the threshold (the largest was returned).
    pub selected: bool,
    pub replicates_used: usize,
    pub failed_replicates: usize,
}

/// Applies the selection rule to raw instabilities along a decreasing grid.
///
/// The instabilities are replaced by their running maximum. Among grid values
/// under the threshold, the one with the highest (monotonized) instability is
/// retained, and ties go to the largest `λ₁`, i.e. the sparsest of equally
/// stable models. If nothing qualifies the largest `λ₁` is returned with
/// `selected = false`.
pub fn select_from_instabilities(grid: &[f64], instabilities: &[f64], threshold: f64) -> Result<StarsSelection> {
    if grid.is_empty() || grid.len() != instabilities.len() || grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::DegenerateGrid);
    }
    let mut monotonized = Vec::with_capacity(instabilities.len());
    let mut running = f64::NEG_INFINITY;
    for &d in instabilities {
        running = running.max(d);
        monotonized.push(running);
    }
    let best = monotonized
        .iter()
        .copied()
        .filter(|&d| d <= threshold)
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
    let (index, selected) = match best {
        Some(level) => (monotonized.iter().position(|&d| d == level).unwrap_or(0), true),
        None => (0, false),
    };
    Ok(StarsSelection {
        lambda1: grid[index],
        index,
        lambda1_grid: grid.to_vec(),
        instabilities: instabilities.to_vec(),
        monotonized,
        selected,
        replicates_used: 0,
        failed_replicates: 0,
    })
}

/// Aggregates per-replicate graph sequences (one graph per grid value, `None`
/// for a failed replicate) into a selection.
pub fn select_from_replicates(
    p: usize,
    cfg: &StarsConfig,
    replicates: &[Option<Vec<Graph>>],
) -> Result<StarsSelection> {
    let k = cfg.lambda1_grid.len();
    let instabilities: Vec<f64> = (0..k)
        .map(|g| {
            let freq = EdgeFrequencies::from_graphs(p, replicates.iter().map(|r| r.as_ref().map(|gs| &gs[g])));
            instability(&freq)
        })
        .collect();
    let mut sel = select_from_instabilities(&cfg.lambda1_grid, &instabilities, cfg.instability_threshold)?;
    sel.failed_replicates = replicates.iter().filter(|r| r.is_none()).count();
    sel.replicates_used = replicates.len() - sel.failed_replicates;
    Ok(sel)
}

/// Full stability selection, replicates fitted sequentially.
pub fn select_lambda1<E: GraphEstimator + ?Sized>(
    x: &DataMatrix,
    cfg: &StarsConfig,
    estimator: &E,
) -> Result<StarsSelection> {
    cfg.validate(x.n())?;
    let replicates: Vec<Option<Vec<Graph>>> = (0..cfg.num_subsamples)
        .map(|r| replicate_graphs(x, cfg, estimator, r).ok())
        .collect();
    select_from_replicates(x.p(), cfg, &replicates)
}

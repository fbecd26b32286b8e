//! Domain types shared by the estimators: data, regression matrices, partitions,
//! hierarchies and graphs, together with the index bookkeeping between a
//! regression matrix and its flattened form.
//!
//! A regression matrix has one row per nodewise regression. Row `i` holds the
//! `p - 1` coefficients of variable `i` regressed on every other variable, in
//! increasing variable order with `i` skipped. Flattening is row-major.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::linalg::norm2;
use crate::{Error, Result};

/// How columns are rescaled after centering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scaling {
    /// Center only.
    None,
    /// Center and scale every column to unit Euclidean norm.
    #[default]
    UnitNorm,
    /// Center and scale every column to unit empirical variance (`‖x‖² = n`).
    UnitVariance,
}

/// Record of a column standardization, so estimates can be mapped back to
/// the original scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub scaling: Scaling,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

/// `n × p` observation matrix (rows are samples, columns are variables).
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    column_names: Option<Vec<String>>,
    standardization: Option<Standardization>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() < 2 {
            return Err(Error::param("data", "at least two observations are required"));
        }
        if values.ncols() < 2 {
            return Err(Error::param("data", "at least two variables are required"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "data matrix" });
        }
        Ok(DataMatrix {
            values,
            column_names: None,
            standardization: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut flat = Vec::with_capacity(n * p);
        for (idx, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != p {
                return Err(Error::DimensionMismatch {
                    what: if idx == 0 { "row length" } else { "ragged row" },
                    expected: p,
                    found: r.len(),
                });
            }
            flat.extend_from_slice(r);
        }
        Self::new(DMatrix::from_row_slice(n, p, &flat))
    }

    pub fn with_column_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p() {
            return Err(Error::DimensionMismatch {
                what: "column names",
                expected: self.p(),
                found: names.len(),
            });
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn p(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    /// Label for column `j`: its name when known, otherwise `V{j+1}`.
    pub fn column_label(&self, j: usize) -> String {
        match &self.column_names {
            Some(names) => names[j].clone(),
            None => format!("V{}", j + 1),
        }
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    pub fn is_standardized(&self) -> bool {
        self.standardization.is_some()
    }

    /// Centers every column and rescales it according to `scaling`.
    ///
    /// A column whose centered values are all (numerically) zero is rejected,
    /// since its nodewise regression is ill-posed.
    pub fn standardize(&self, scaling: Scaling) -> Result<Self> {
        let (n, p) = self.values.shape();
        let mut out = self.values.clone();
        let mut means = Vec::with_capacity(p);
        let mut scales = Vec::with_capacity(p);
        for j in 0..p {
            let mut col = out.column_mut(j);
            let raw_norm = col.norm();
            let mean = col.sum() / n as f64;
            col.add_scalar_mut(-mean);
            let norm = col.norm();
            if norm <= 1e-12 * f64::max(1.0, raw_norm) {
                return Err(Error::ZeroVariance { column: j });
            }
            let scale = match scaling {
                Scaling::None => 1.0,
                Scaling::UnitNorm => norm,
                Scaling::UnitVariance => norm / libm::sqrt(n as f64),
            };
            col.scale_mut(1.0 / scale);
            means.push(mean);
            scales.push(scale);
        }
        Ok(DataMatrix {
            values: out,
            column_names: self.column_names.clone(),
            standardization: Some(Standardization {
                scaling,
                means,
                scales,
            }),
        })
    }

    /// New matrix made of the given rows (repetitions allowed). The
    /// standardization record is dropped.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let p = self.p();
        let mut m = DMatrix::zeros(rows.len(), p);
        for (dst, &src) in rows.iter().enumerate() {
            if src >= self.n() {
                return Err(Error::param("row index", format!("{src} out of range")));
            }
            m.row_mut(dst).copy_from(&self.values.row(src));
        }
        let mut out = Self::new(m)?;
        out.column_names = self.column_names.clone();
        Ok(out)
    }
}

/// Position of variable `k` inside row `i` of a regression matrix.
#[inline]
pub fn slot(i: usize, k: usize) -> usize {
    debug_assert_ne!(i, k);
    if k < i {
        k
    } else {
        k - 1
    }
}

/// Variable held at position `s` of row `i`.
#[inline]
pub fn variable_at(i: usize, s: usize) -> usize {
    if s < i {
        s
    } else {
        s + 1
    }
}

/// Stacked nodewise regression coefficients, `p` rows of length `p - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionMatrix {
    p: usize,
    coeffs: Vec<f64>,
}

impl RegressionMatrix {
    pub fn zeros(p: usize) -> Self {
        RegressionMatrix {
            p,
            coeffs: vec![0.0; p * p.saturating_sub(1)],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let p = rows.len();
        let mut coeffs = Vec::with_capacity(p * p.saturating_sub(1));
        for r in &rows {
            if r.len() + 1 != p {
                return Err(Error::DimensionMismatch {
                    what: "regression row",
                    expected: p.saturating_sub(1),
                    found: r.len(),
                });
            }
            coeffs.extend_from_slice(r);
        }
        Ok(RegressionMatrix { p, coeffs })
    }

    /// Builds a regression matrix from a dense `p × p` matrix, ignoring the diagonal.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        let p = m.nrows();
        if m.ncols() != p {
            return Err(Error::DimensionMismatch {
                what: "dense coefficient matrix",
                expected: p,
                found: m.ncols(),
            });
        }
        let mut beta = Self::zeros(p);
        for i in 0..p {
            for k in (0..p).filter(|&k| k != i) {
                beta.set(i, k, m[(i, k)]);
            }
        }
        Ok(beta)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.p - 1;
        &self.coeffs[i * w..(i + 1) * w]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let w = self.p - 1;
        &mut self.coeffs[i * w..(i + 1) * w]
    }

    /// Coefficient of variable `k` in the regression of variable `i`.
    pub fn get(&self, i: usize, k: usize) -> f64 {
        assert_ne!(i, k, "regression rows have no self-coefficient");
        self.row(i)[slot(i, k)]
    }

    pub fn set(&mut self, i: usize, k: usize, value: f64) {
        assert_ne!(i, k, "regression rows have no self-coefficient");
        let s = slot(i, k);
        self.row_mut(i)[s] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Dense `p × p` view with a zero diagonal.
    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.p, self.p, |i, k| if i == k { 0.0 } else { self.get(i, k) })
    }
}

/// Row-major flattening `(β¹; β²; …; βᵖ)`.
pub fn vectorize(beta: &RegressionMatrix) -> Vec<f64> {
    beta.coeffs.clone()
}

pub fn devectorize(p: usize, flat: Vec<f64>) -> Result<RegressionMatrix> {
    if p < 2 || flat.len() != p * (p - 1) {
        return Err(Error::DimensionMismatch {
            what: "flattened regression matrix",
            expected: p * p.saturating_sub(1),
            found: flat.len(),
        });
    }
    Ok(RegressionMatrix { p, coeffs: flat })
}

/// `βⁱ − τ_ij(βʲ)`: row `i` minus row `j` after swapping the cross coefficients.
///
/// Entry at position `slot(i, k)` compares `βⁱ_k` with `βʲ_k` for `k ∉ {i, j}`;
/// the entry at `slot(i, j)` compares `βⁱ_j` with `βʲ_i`.
pub fn aligned_difference(beta: &RegressionMatrix, i: usize, j: usize) -> Result<Vec<f64>> {
    let p = beta.p;
    if i == j || i >= p || j >= p {
        return Err(Error::InvalidPair { i, j, p });
    }
    let mut out = vec![0.0; p - 1];
    aligned_difference_into(beta.as_slice(), p, i, j, &mut out);
    Ok(out)
}

pub(crate) fn aligned_difference_into(flat: &[f64], p: usize, i: usize, j: usize, out: &mut [f64]) {
    let w = p - 1;
    let ri = &flat[i * w..(i + 1) * w];
    let rj = &flat[j * w..(j + 1) * w];
    for (s, o) in out.iter_mut().enumerate() {
        let k = variable_at(i, s);
        let partner = if k == j { i } else { k };
        *o = ri[s] - rj[slot(j, partner)];
    }
}

/// Symmetric, nonnegative fusion weights with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights {
    p: usize,
    values: Vec<f64>,
}

impl Weights {
    pub fn new(p: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != p * p {
            return Err(Error::DimensionMismatch {
                what: "weight matrix",
                expected: p * p,
                found: values.len(),
            });
        }
        for i in 0..p {
            if values[i * p + i] != 0.0 {
                return Err(Error::param("weights", "diagonal must be zero"));
            }
            for j in 0..p {
                let w = values[i * p + j];
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::param("weights", "entries must be finite and nonnegative"));
                }
                if w != values[j * p + i] {
                    return Err(Error::param("weights", "matrix must be symmetric"));
                }
            }
        }
        Ok(Weights { p, values })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.p + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparameters {
    pub lambda1: f64,
    pub lambda2: f64,
    pub weights: Option<Weights>,
}

impl Hyperparameters {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1 >= 0.0) || !lambda1.is_finite() {
            return Err(Error::param("lambda1", "must be finite and nonnegative"));
        }
        if !(lambda2 >= 0.0) || !lambda2.is_finite() {
            return Err(Error::param("lambda2", "must be finite and nonnegative"));
        }
        Ok(Hyperparameters {
            lambda1,
            lambda2,
            weights: None,
        })
    }

    pub fn with_weights(mut self, weights: Weights) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w.get(i, j))
    }
}

/// Flat clustering of `p` variables into clusters `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Validates that every id in `0..k` is used, where `k = max + 1`.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        for &l in &labels {
            seen[l] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::param("partition", "cluster ids must be contiguous from 0"));
        }
        Ok(Partition { labels, k })
    }

    /// Relabels arbitrary ids to `0..k` in order of first appearance.
    pub fn from_labels<L: PartialEq + Clone>(raw: &[L]) -> Self {
        let mut distinct: Vec<L> = Vec::new();
        let labels = raw
            .iter()
            .map(|l| match distinct.iter().position(|d| d == l) {
                Some(pos) => pos,
                None => {
                    distinct.push(l.clone());
                    distinct.len() - 1
                }
            })
            .collect();
        Partition {
            labels,
            k: distinct.len(),
        }
    }

    pub fn singletons(p: usize) -> Self {
        Partition {
            labels: (0..p).collect(),
            k: p,
        }
    }

    pub fn single_cluster(p: usize) -> Self {
        Partition {
            labels: vec![0; p],
            k: usize::from(p > 0),
        }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_clusters(&self) -> usize {
        self.k
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == cluster)
            .collect()
    }

    /// True when every cluster of `self` lies inside a single cluster of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.len() != coarser.len() {
            return false;
        }
        let mut image = vec![usize::MAX; self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            let c = coarser.labels[i];
            if image[l] == usize::MAX {
                image[l] = c;
            } else if image[l] != c {
                return false;
            }
        }
        true
    }
}

/// One level of the regularization path.
#[derive(Debug, Clone, PartialEq)]
pub struct Level {
    pub lambda2: f64,
    pub partition: Partition,
    pub beta: RegressionMatrix,
    pub converged: bool,
    pub duality_gap: f64,
}

/// Two clusters (labels of the previous level) fused at `lambda2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub lambda2: f64,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Hierarchy {
    pub levels: Vec<Level>,
    pub merges: Vec<Merge>,
}

impl Hierarchy {
    /// Checks strictly increasing `lambda2` and nesting of consecutive partitions.
    pub fn is_nested(&self) -> bool {
        self.levels.windows(2).all(|w| {
            w[0].lambda2 < w[1].lambda2 && w[0].partition.refines(&w[1].partition)
        })
    }

    /// Level whose cluster count is closest to `k` (first one on ties).
    pub fn level_nearest(&self, k: usize) -> Option<&Level> {
        self.levels
            .iter()
            .min_by_key(|l| l.partition.num_clusters().abs_diff(k))
    }
}

/// Rule combining the two nodewise estimates of an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeRule {
    And,
    #[default]
    Or,
}

/// Symmetric adjacency with a hollow diagonal and optional edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<bool>,
    weights: Option<Vec<f64>>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            n,
            adjacency: vec![false; n * n],
            weights: None,
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for i in 0..n {
            for j in i + 1..n {
                g.set_edge(i, j, true);
            }
        }
        g
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::empty(n);
        for &(i, j) in edges {
            if i == j || i >= n || j >= n {
                return Err(Error::InvalidPair { i, j, p: n });
            }
            g.set_edge(i, j, true);
        }
        Ok(g)
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i * self.n + j]
    }

    /// Sets or clears the undirected edge `{i, j}`; self-loops are ignored.
    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        if i == j {
            return;
        }
        self.adjacency[i * self.n + j] = present;
        self.adjacency[j * self.n + i] = present;
    }

    pub fn set_weight(&mut self, i: usize, j: usize, w: f64) {
        let n = self.n;
        let weights = self.weights.get_or_insert_with(|| vec![0.0; n * n]);
        weights[i * n + j] = w;
        weights[j * n + i] = w;
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.weights.as_ref().map(|w| w[i * self.n + j])
    }

    pub fn has_weights(&self) -> bool {
        self.weights.is_some()
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.has_edge(i, j)).count()
    }

    pub fn is_symmetric_hollow(&self) -> bool {
        (0..self.n).all(|i| {
            !self.has_edge(i, i) && (0..self.n).all(|j| self.has_edge(i, j) == self.has_edge(j, i))
        })
    }
}

/// Support graph of a regression matrix.
///
/// Edge `{i, j}` is kept when `|βⁱ_j| > tol` and/or `|βʲ_i| > tol` depending on
/// `rule`. The weight of a kept edge is the mean magnitude of those of the two
/// coefficients that exceed `tol`.
pub fn graph_from_beta(beta: &RegressionMatrix, rule: EdgeRule, tol: f64) -> Graph {
    let p = beta.p();
    let mut g = Graph::empty(p);
    g.weights = Some(vec![0.0; p * p]);
    for i in 0..p {
        for j in i + 1..p {
            let a = beta.get(i, j).abs();
            let b = beta.get(j, i).abs();
            let present = match rule {
                EdgeRule::And => a > tol && b > tol,
                EdgeRule::Or => a > tol || b > tol,
            };
            if present {
                let (sum, count) = [a, b]
                    .iter()
                    .filter(|&&v| v > tol)
                    .fold((0.0, 0usize), |(s, c), &v| (s + v, c + 1));
                g.set_edge(i, j, true);
                g.set_weight(i, j, sum / count as f64);
            }
        }
    }
    g
}

/// Summary of a single penalized solve.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveDiagnostics {
    /// Unsmoothed objective after each outer (continuation) iteration.
    pub objective_trace: Vec<f64>,
    pub final_duality_gap: f64,
    /// Total inner (proximal gradient) iterations.
    pub iterations: usize,
    pub outer_iterations: usize,
    pub mu_trace: Vec<f64>,
    pub converged: bool,
}

/// Largest `ℓ2` norm of aligned row differences, used to check fusion.
pub fn max_aligned_difference(beta: &RegressionMatrix) -> f64 {
    let p = beta.p();
    let mut buf = vec![0.0; p - 1];
    let mut m: f64 = 0.0;
    for i in 0..p {
        for j in i + 1..p {
            aligned_difference_into(beta.as_slice(), p, i, j, &mut buf);
            m = m.max(norm2(&buf));
        }
    }
    m
}

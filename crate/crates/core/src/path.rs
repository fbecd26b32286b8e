//! Regularization path over the fusion weight.
//!
//! Starting from singleton clusters, the fusion weight grows geometrically;
//! at every level the problem is re-solved from the previous solution,
//! variables whose aligned regression vectors coincide (up to `eps_fuse`) are
//! merged, and the level is recorded. Merges are never undone, so the levels
//! form a hierarchy.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DVector;

use crate::linalg::{norm2, pinv_solve};
use crate::model::{
    aligned_difference_into, graph_from_beta, variable_at, DataMatrix, EdgeRule, Graph, Hierarchy,
    Hyperparameters, Level, Merge, Partition, RegressionMatrix,
};
use crate::objective::QuadraticLoss;
use crate::solver::{conesta_solve, SolverConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub lambda2_start: f64,
    /// Geometric growth factor of the fusion weight, `> 1`.
    pub kappa: f64,
    /// Aligned rows closer than this (in `ℓ2`) are fused.
    pub eps_fuse: f64,
    pub max_levels: usize,
}

impl PathConfig {
    /// Defaults scaled to the data: `λ₂` starts at `1e-3` times
    /// [`lambda2_max_heuristic`], `κ = 1.3`, `eps_fuse = 1e-4`, 50 levels.
    pub fn default_for(x: &DataMatrix) -> Self {
        PathConfig {
            lambda2_start: 1e-3 * lambda2_max_heuristic(x),
            kappa: 1.3,
            eps_fuse: 1e-4,
            max_levels: 50,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda2_start > 0.0) || !self.lambda2_start.is_finite() {
            return Err(Error::param("lambda2_start", "must be positive"));
        }
        if !(self.kappa > 1.0) {
            return Err(Error::param("kappa", "must be greater than 1"));
        }
        if !(self.eps_fuse >= 0.0) {
            return Err(Error::param("eps_fuse", "must be nonnegative"));
        }
        if self.max_levels == 0 {
            return Err(Error::param("max_levels", "must be positive"));
        }
        Ok(())
    }

    /// The fusion weights the path visits, ignoring early termination.
    pub fn schedule(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.max_levels);
        let mut l = self.lambda2_start;
        for _ in 0..self.max_levels {
            out.push(l);
            l *= self.kappa;
        }
        out
    }
}

/// Scale of fusion weight at which rows start to merge wholesale: the largest
/// aligned difference between the rows of `(X^{∖i})ᵀXⁱ`, the gradient of the
/// loss at `β = 0`.
pub fn lambda2_max_heuristic(x: &DataMatrix) -> f64 {
    let loss = QuadraticLoss::new(x);
    let p = x.p();
    let mut buf = vec![0.0; p - 1];
    let mut m: f64 = 0.0;
    for i in 0..p {
        for j in i + 1..p {
            aligned_difference_into(loss.cross(), p, i, j, &mut buf);
            m = m.max(norm2(&buf));
        }
    }
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// Minimum-norm least-squares regression of every column on the others.
pub fn init_beta(x: &DataMatrix) -> RegressionMatrix {
    let v = x.values();
    let (n, p) = v.shape();
    let mut beta = RegressionMatrix::zeros(p);
    let mut design = nalgebra::DMatrix::zeros(n, p - 1);
    for i in 0..p {
        for s in 0..p - 1 {
            design.set_column(s, &v.column(variable_at(i, s)));
        }
        let target = DVector::from_iterator(n, v.column(i).iter().copied());
        let sol = pinv_solve(&design, &target);
        beta.row_mut(i).copy_from_slice(sol.as_slice());
    }
    beta
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    /// Joins the sets of `a` and `b`; false when already joined.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

/// Coarsens `current` by the transitive closure of `{‖βⁱ − τ_ij(βʲ)‖ < eps_fuse}`.
/// Also returns the merges as pairs of `current` labels.
fn fuse(beta: &RegressionMatrix, current: &Partition, eps_fuse: f64) -> (Partition, Vec<(usize, usize)>) {
    let p = beta.p();
    let mut uf = UnionFind::new(p);
    // existing clusters first, so the result never splits them
    let mut first_of = vec![usize::MAX; current.num_clusters()];
    for i in 0..p {
        let c = current.label(i);
        if first_of[c] == usize::MAX {
            first_of[c] = i;
        } else {
            uf.union(first_of[c], i);
        }
    }
    let mut merges = Vec::new();
    let mut buf = vec![0.0; p - 1];
    for i in 0..p {
        for j in i + 1..p {
            if uf.find(i) == uf.find(j) {
                continue;
            }
            aligned_difference_into(beta.as_slice(), p, i, j, &mut buf);
            if norm2(&buf) < eps_fuse {
                let (ri, rj) = (uf.find(i), uf.find(j));
                let (li, lj) = (current.label(ri), current.label(rj));
                uf.union(i, j);
                merges.push((li.min(lj), li.max(lj)));
            }
        }
    }
    let roots: Vec<usize> = (0..p).map(|i| uf.find(i)).collect();
    (Partition::from_labels(&roots), merges)
}

/// Merges clusters of `current` whose members have fused regression vectors.
pub fn detect_fusions(beta: &RegressionMatrix, current: &Partition, eps_fuse: f64) -> Result<Partition> {
    if current.len() != beta.p() {
        return Err(Error::DimensionMismatch {
            what: "partition",
            expected: beta.p(),
            found: current.len(),
        });
    }
    Ok(fuse(beta, current, eps_fuse).0)
}

/// Sweeps `λ₂` geometrically at fixed `λ₁`, from singletons until a single
/// cluster remains or `max_levels` levels have been solved.
///
/// A level whose solve fails keeps the previous coefficients and is flagged
/// as not converged; the sweep continues.
pub fn mglasso_path(
    x: &DataMatrix,
    lambda1: f64,
    cfg: &PathConfig,
    solver_cfg: &SolverConfig,
) -> Result<Hierarchy> {
    cfg.validate()?;
    solver_cfg.validate()?;
    Hyperparameters::new(lambda1, cfg.lambda2_start)?;
    let p = x.p();
    let mut beta = init_beta(x);
    let mut partition = Partition::singletons(p);
    let mut hierarchy = Hierarchy::default();
    for lambda2 in cfg.schedule() {
        let hp = Hyperparameters::new(lambda1, lambda2)?;
        let (converged, gap) = match conesta_solve(x, &hp, solver_cfg, Some(&beta)) {
            Ok((b, diag)) => {
                beta = b;
                (diag.converged, diag.final_duality_gap)
            }
            Err(_) => (false, f64::INFINITY),
        };
        let (next, merges) = fuse(&beta, &partition, cfg.eps_fuse);
        hierarchy
            .merges
            .extend(merges.into_iter().map(|(left, right)| Merge { lambda2, left, right }));
        partition = next;
        hierarchy.levels.push(Level {
            lambda2,
            partition: partition.clone(),
            beta: beta.clone(),
            converged,
            duality_gap: gap,
        });
        if partition.num_clusters() <= 1 {
            break;
        }
    }
    Ok(hierarchy)
}

/// Graph between clusters: clusters `a ≠ b` are linked when some edge of the
/// variable-level support graph joins a member of `a` to a member of `b`.
/// The meta-weight is the mean magnitude of the crossing coefficients that
/// support those edges.
pub fn cluster_level_graph(
    beta: &RegressionMatrix,
    partition: &Partition,
    rule: EdgeRule,
    tol: f64,
) -> Result<Graph> {
    let p = beta.p();
    if partition.len() != p {
        return Err(Error::DimensionMismatch {
            what: "partition",
            expected: p,
            found: partition.len(),
        });
    }
    let k = partition.num_clusters();
    let variable_graph = graph_from_beta(beta, rule, tol);
    let mut sums = vec![0.0; k * k];
    let mut counts = vec![0usize; k * k];
    for i in 0..p {
        for j in i + 1..p {
            let (a, b) = (partition.label(i), partition.label(j));
            if a == b || !variable_graph.has_edge(i, j) {
                continue;
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            for v in [beta.get(i, j).abs(), beta.get(j, i).abs()] {
                if v > tol {
                    sums[lo * k + hi] += v;
                    counts[lo * k + hi] += 1;
                }
            }
        }
    }
    let mut g = Graph::empty(k);
    for a in 0..k {
        for b in a + 1..k {
            if counts[a * k + b] > 0 {
                g.set_edge(a, b, true);
            }
        }
    }
    for a in 0..k {
        for b in a + 1..k {
            let c = counts[a * k + b];
            g.set_weight(a, b, if c > 0 { sums[a * k + b] / c as f64 } else { 0.0 });
        }
    }
    Ok(g)
}

//! Ground-truth graphs with positive-definite precision matrices, and
//! Gaussian samples drawn from them.
//!
//! * Stochastic block model: latent memberships, Bernoulli edges, and
//!   within-block precision entries chosen so that a complete block has
//!   pairwise correlation `ρ`.
//! * Erdős–Rényi: independent edges of fixed density.
//! * Scale-free: preferential attachment grown from a two-node chain.
//!
//! Precision values for the last two models are drawn uniformly on
//! `±[0.2, 0.6]` and made strictly diagonally dominant.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::min_eigenvalue;
use crate::model::{DataMatrix, Graph, Partition};
use crate::{Error, Result};

/// Smallest eigenvalue accepted without diagonal loading.
const PD_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum GraphModel {
    StochasticBlock {
        /// Cluster proportions, summing to one.
        pi: Vec<f64>,
        alpha_in: f64,
        alpha_out: f64,
    },
    ErdosRenyi {
        alpha: f64,
    },
    ScaleFree {
        num_edges: usize,
    },
}

impl GraphModel {
    /// Five equal blocks, within-block density 0.75, between-block 0.01.
    pub fn default_sbm() -> Self {
        GraphModel::StochasticBlock {
            pi: vec![0.2; 5],
            alpha_in: 0.75,
            alpha_out: 0.01,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            GraphModel::StochasticBlock { .. } => "sbm",
            GraphModel::ErdosRenyi { .. } => "erdos_renyi",
            GraphModel::ScaleFree { .. } => "scale_free",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub p: usize,
    pub n: usize,
    pub model: GraphModel,
    /// Target within-block correlation (block model only).
    pub rho: f64,
    pub seed: u64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.p < 2 {
            return Err(Error::param("p", "at least two variables are required"));
        }
        if self.n < 2 {
            return Err(Error::param("n", "at least two observations are required"));
        }
        let prob = |name: &'static str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::param(name, "must be a probability in [0, 1]"))
            }
        };
        match &self.model {
            GraphModel::StochasticBlock { pi, alpha_in, alpha_out } => {
                if pi.is_empty() {
                    return Err(Error::param("pi", "pi required for SBM"));
                }
                if pi.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                    return Err(Error::param("pi", "proportions must lie in [0, 1]"));
                }
                if (pi.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(Error::param("pi", "proportions must sum to 1"));
                }
                prob("alpha_in", *alpha_in)?;
                prob("alpha_out", *alpha_out)?;
                if !(self.rho > -1.0 && self.rho < 1.0) {
                    return Err(Error::param("rho", "must lie in (-1, 1)"));
                }
            }
            GraphModel::ErdosRenyi { alpha } => prob("alpha", *alpha)?,
            GraphModel::ScaleFree { num_edges } => {
                let max = self.p * (self.p - 1) / 2;
                if *num_edges < self.p - 1 || *num_edges > max {
                    return Err(Error::param(
                        "num_edges",
                        alloc::format!("must lie in [{}, {}] for p = {}", self.p - 1, max, self.p),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Draws the ground truth then `n` observations from one seeded stream.
    pub fn generate(&self) -> Result<(GroundTruth, DataMatrix)> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let truth = match self.model {
            GraphModel::StochasticBlock { .. } => sbm_ground_truth(self, &mut rng)?,
            GraphModel::ErdosRenyi { .. } => erdos_ground_truth(self, &mut rng)?,
            GraphModel::ScaleFree { .. } => scale_free_ground_truth(self, &mut rng)?,
        };
        let data = sample_gaussian(&truth, self.n, &mut rng)?;
        Ok((truth, data))
    }
}

/// Seed of replication `r` derived from a master seed (SplitMix64 mixing).
pub fn replicate_seed(master: u64, r: u64) -> u64 {
    let mut z = master ^ r.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// Generated graph. For the block model this includes between-block edges
    /// that carry no precision entry.
    pub adjacency: Graph,
    pub precision: DMatrix<f64>,
    /// Planted clusters (a single cluster for unstructured models).
    pub labels: Partition,
    pub rho: Option<f64>,
    /// Amount added to the diagonal to restore positive definiteness (0 if none).
    pub diagonal_shift: f64,
}

impl GroundTruth {
    /// Support of the off-diagonal precision entries: the true
    /// conditional-independence graph.
    pub fn support(&self) -> Graph {
        let p = self.precision.nrows();
        let mut g = Graph::empty(p);
        for i in 0..p {
            for j in i + 1..p {
                if self.precision[(i, j)] != 0.0 {
                    g.set_edge(i, j, true);
                }
            }
        }
        g
    }

    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        self.precision
            .clone()
            .try_inverse()
            .ok_or(Error::NotPositiveDefinite {
                min_eigenvalue: min_eigenvalue(&self.precision),
            })
    }
}

/// Diagonal loads `omega` when its smallest eigenvalue is below the floor;
/// returns the shift applied.
fn ensure_positive_definite(omega: &mut DMatrix<f64>) -> f64 {
    let min = min_eigenvalue(omega);
    if min > PD_FLOOR {
        return 0.0;
    }
    let shift = min.abs() + 0.01;
    for i in 0..omega.nrows() {
        omega[(i, i)] += shift;
    }
    shift
}

/// `(ω_ii, ω_ij)` for a complete block of size `size` with correlation `rho`.
pub fn block_precision_entries(rho: f64, size: usize) -> Result<(f64, f64)> {
    let q = size as f64;
    let denom = 1.0 + rho * (q - 2.0) - rho * rho * (q - 1.0);
    if !(denom > 0.0) {
        return Err(Error::param(
            "rho",
            alloc::format!("rho = {rho} is not admissible for a block of size {size}"),
        ));
    }
    Ok(((1.0 + rho * (q - 2.0)) / denom, -rho / denom))
}

pub fn sbm_ground_truth<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<GroundTruth> {
    cfg.validate()?;
    let GraphModel::StochasticBlock { pi, alpha_in, alpha_out } = &cfg.model else {
        return Err(Error::param("model", "expected a stochastic block model"));
    };
    let p = cfg.p;
    let z: Vec<usize> = (0..p)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (k, w) in pi.iter().enumerate() {
                acc += w;
                if u < acc {
                    return k;
                }
            }
            pi.len() - 1
        })
        .collect();
    let mut adjacency = Graph::empty(p);
    for i in 0..p {
        for j in i + 1..p {
            let a = if z[i] == z[j] { *alpha_in } else { *alpha_out };
            if rng.random::<f64>() < a {
                adjacency.set_edge(i, j, true);
            }
        }
    }
    let mut sizes = vec![0usize; pi.len()];
    for &k in &z {
        sizes[k] += 1;
    }
    let mut omega = DMatrix::zeros(p, p);
    for i in 0..p {
        let (w_ii, w_ij) = block_precision_entries(cfg.rho, sizes[z[i]])?;
        omega[(i, i)] = w_ii;
        for j in 0..p {
            if j != i && z[j] == z[i] && adjacency.has_edge(i, j) {
                omega[(i, j)] = w_ij;
            }
        }
    }
    let diagonal_shift = ensure_positive_definite(&mut omega);
    Ok(GroundTruth {
        adjacency,
        precision: omega,
        labels: Partition::from_labels(&z),
        rho: Some(cfg.rho),
        diagonal_shift,
    })
}

/// Off-diagonal entries uniform on `±[0.2, 0.6]`, diagonal = row `ℓ1` + 0.1.
fn dominant_precision<R: Rng + ?Sized>(graph: &Graph, rng: &mut R) -> DMatrix<f64> {
    let p = graph.num_nodes();
    let mut omega = DMatrix::zeros(p, p);
    for (i, j) in graph.edges() {
        let magnitude = 0.2 + 0.4 * rng.random::<f64>();
        let v = if rng.random::<bool>() { magnitude } else { -magnitude };
        omega[(i, j)] = v;
        omega[(j, i)] = v;
    }
    for i in 0..p {
        let row: f64 = (0..p).filter(|&j| j != i).map(|j| omega[(i, j)].abs()).sum();
        omega[(i, i)] = row + 0.1;
    }
    omega
}

fn unstructured_truth<R: Rng + ?Sized>(adjacency: Graph, rng: &mut R) -> GroundTruth {
    let p = adjacency.num_nodes();
    let mut precision = dominant_precision(&adjacency, rng);
    let diagonal_shift = ensure_positive_definite(&mut precision);
    GroundTruth {
        adjacency,
        precision,
        labels: Partition::single_cluster(p),
        rho: None,
        diagonal_shift,
    }
}

pub fn erdos_ground_truth<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<GroundTruth> {
    cfg.validate()?;
    let GraphModel::ErdosRenyi { alpha } = cfg.model else {
        return Err(Error::param("model", "expected an Erdős–Rényi model"));
    };
    let mut adjacency = Graph::empty(cfg.p);
    for i in 0..cfg.p {
        for j in i + 1..cfg.p {
            if rng.random::<f64>() < alpha {
                adjacency.set_edge(i, j, true);
            }
        }
    }
    Ok(unstructured_truth(adjacency, rng))
}

/// Picks a node with probability proportional to its degree among `candidates`.
fn degree_weighted<R: Rng + ?Sized>(degrees: &[usize], candidates: &[usize], rng: &mut R) -> usize {
    let total: usize = candidates.iter().map(|&c| degrees[c]).sum();
    if total == 0 {
        return candidates[rng.random_range(0..candidates.len())];
    }
    let mut u = rng.random_range(0..total);
    for &c in candidates {
        if u < degrees[c] {
            return c;
        }
        u -= degrees[c];
    }
    *candidates.last().expect("non-empty candidates")
}

/// Preferential attachment: a two-node chain, then each new node links to one
/// existing node chosen proportionally to degree. The rest of the edge budget
/// joins a uniformly chosen node to a degree-weighted non-neighbor.
pub fn scale_free_ground_truth<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Result<GroundTruth> {
    cfg.validate()?;
    let GraphModel::ScaleFree { num_edges } = cfg.model else {
        return Err(Error::param("model", "expected a scale-free model"));
    };
    let p = cfg.p;
    let mut adjacency = Graph::empty(p);
    let mut degrees = vec![0usize; p];
    adjacency.set_edge(0, 1, true);
    degrees[0] = 1;
    degrees[1] = 1;
    for v in 2..p {
        let existing: Vec<usize> = (0..v).collect();
        let u = degree_weighted(&degrees, &existing, rng);
        adjacency.set_edge(u, v, true);
        degrees[u] += 1;
        degrees[v] += 1;
    }
    let mut edges = p - 1;
    while edges < num_edges {
        let u = rng.random_range(0..p);
        let candidates: Vec<usize> = (0..p).filter(|&w| w != u && !adjacency.has_edge(u, w)).collect();
        if candidates.is_empty() {
            continue;
        }
        let w = degree_weighted(&degrees, &candidates, rng);
        adjacency.set_edge(u, w, true);
        degrees[u] += 1;
        degrees[w] += 1;
        edges += 1;
    }
    Ok(unstructured_truth(adjacency, rng))
}

/// `n` independent rows from `N(0, Ω⁻¹)`: with `Ω = LLᵀ`, `x = L⁻ᵀ z`.
pub fn sample_gaussian<R: Rng + ?Sized>(truth: &GroundTruth, n: usize, rng: &mut R) -> Result<DataMatrix> {
    let p = truth.precision.nrows();
    let chol = truth
        .precision
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite {
            min_eigenvalue: min_eigenvalue(&truth.precision),
        })?;
    let lt = chol.l().transpose();
    let mut z = DMatrix::zeros(p, n);
    for c in 0..n {
        for r in 0..p {
            z[(r, c)] = StandardNormal.sample(rng);
        }
    }
    let x = lt
        .solve_upper_triangular(&z)
        .ok_or(Error::NotPositiveDefinite { min_eigenvalue: 0.0 })?;
    DataMatrix::new(x.transpose())
}

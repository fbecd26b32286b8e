//! Scores for estimated graphs and partitions.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{graph_from_beta, DataMatrix, EdgeRule, Graph, Partition, RegressionMatrix, Scaling};
use crate::neighborhood::{Neighborhood, NeighborhoodConfig};
use crate::solver::{GraphEstimator, MgLasso, SolverConfig};
use crate::synthetic::{replicate_seed, SimConfig};
use crate::{Error, Result};

/// Number of false-positive-rate points used for vertical averaging.
pub const FPR_GRID_POINTS: usize = 101;

/// Edge confusion counts over unordered variable pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub true_pos: usize,
    pub false_pos: usize,
    pub true_neg: usize,
    pub false_neg: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    /// `TP / (TP + FN)`, or 1 when the truth has no edge.
    pub fn sensitivity(&self) -> f64 {
        ratio_or_one(self.true_pos, self.true_pos + self.false_neg)
    }

    /// `TN / (TN + FP)`, or 1 when the truth is complete.
    pub fn specificity(&self) -> f64 {
        ratio_or_one(self.true_neg, self.true_neg + self.false_pos)
    }

    /// True when one of the rates fell back to the empty-denominator convention.
    pub fn has_empty_class(&self) -> bool {
        self.true_pos + self.false_neg == 0 || self.true_neg + self.false_pos == 0
    }
}

fn ratio_or_one(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

pub fn confusion(estimate: &Graph, truth: &Graph) -> Result<ConfusionCounts> {
    let p = truth.num_nodes();
    if estimate.num_nodes() != p {
        return Err(Error::DimensionMismatch {
            what: "estimated graph",
            expected: p,
            found: estimate.num_nodes(),
        });
    }
    let mut c = ConfusionCounts::default();
    for i in 0..p {
        for j in i + 1..p {
            match (estimate.has_edge(i, j), truth.has_edge(i, j)) {
                (true, true) => c.true_pos += 1,
                (true, false) => c.false_pos += 1,
                (false, true) => c.false_neg += 1,
                (false, false) => c.true_neg += 1,
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub lambda1: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// Fitted points in grid order (failed fits are absent).
    pub points: Vec<RocPoint>,
    /// Sorted `(fpr, tpr)` pairs including the `(0,0)` and `(1,1)` endpoints.
    pub curve: Vec<(f64, f64)>,
    pub auc: f64,
    /// Grid positions whose fit failed.
    pub failed: Vec<usize>,
}

impl RocCurve {
    /// Builds the augmented curve from raw points.
    pub fn from_points(points: Vec<RocPoint>, failed: Vec<usize>) -> Self {
        let mut curve: Vec<(f64, f64)> = points.iter().map(|pt| (pt.fpr, pt.tpr)).collect();
        curve.push((0.0, 0.0));
        curve.push((1.0, 1.0));
        curve.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let auc = trapezoid(&curve);
        RocCurve {
            points,
            curve,
            auc,
            failed,
        }
    }

    /// Scores one graph per grid value; `None` marks a failed fit.
    pub fn from_graphs(grid: &[f64], graphs: &[Option<Graph>], truth: &Graph) -> Result<Self> {
        if grid.len() != graphs.len() {
            return Err(Error::DimensionMismatch {
                what: "graphs per grid value",
                expected: grid.len(),
                found: graphs.len(),
            });
        }
        let mut points = Vec::with_capacity(grid.len());
        let mut failed = Vec::new();
        for (k, (&lambda1, g)) in grid.iter().zip(graphs).enumerate() {
            match g {
                Some(g) => {
                    let c = confusion(g, truth)?;
                    points.push(RocPoint {
                        lambda1,
                        fpr: 1.0 - c.specificity(),
                        tpr: c.sensitivity(),
                    });
                }
                None => failed.push(k),
            }
        }
        Ok(Self::from_points(points, failed))
    }

    /// Linear interpolation of the true positive rate at `fpr`. Vertical
    /// segments (ties in fpr) take their highest value.
    pub fn tpr_at(&self, fpr: f64) -> f64 {
        let c = &self.curve;
        let mut best = 0.0f64;
        for w in c.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if fpr < x0 || fpr > x1 {
                continue;
            }
            let y = if x1 > x0 {
                y0 + (y1 - y0) * (fpr - x0) / (x1 - x0)
            } else {
                y0.max(y1)
            };
            best = best.max(y);
        }
        best
    }
}

/// Area under a curve sorted by abscissa.
pub fn trapezoid(curve: &[(f64, f64)]) -> f64 {
    curve
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * 0.5 * (w[0].1 + w[1].1))
        .sum()
}

/// Fits `estimator` down `grid` (warm starts) and scores each fit against `truth`.
pub fn roc_curve<E: GraphEstimator + ?Sized>(
    x: &DataMatrix,
    truth: &Graph,
    grid: &[f64],
    estimator: &E,
    rule: EdgeRule,
    tol: f64,
) -> Result<RocCurve> {
    if grid.is_empty() {
        return Err(Error::DegenerateGrid);
    }
    if truth.num_nodes() != x.p() {
        return Err(Error::DimensionMismatch {
            what: "truth graph",
            expected: x.p(),
            found: truth.num_nodes(),
        });
    }
    let mut warm: Option<RegressionMatrix> = None;
    let mut graphs = Vec::with_capacity(grid.len());
    for &lambda1 in grid {
        match estimator.fit(x, lambda1, warm.as_ref()) {
            Ok((beta, _)) => {
                graphs.push(Some(graph_from_beta(&beta, rule, tol)));
                warm = Some(beta);
            }
            Err(_) => graphs.push(None),
        }
    }
    RocCurve::from_graphs(grid, &graphs, truth)
}

/// Mean ROC over replications, vertically averaged on a regular fpr grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedRoc {
    pub lambda2: f64,
    pub fpr: Vec<f64>,
    pub mean_tpr: Vec<f64>,
    pub auc_mean: f64,
    pub auc_sd: f64,
    pub replications: usize,
}

pub fn fpr_grid() -> Vec<f64> {
    (0..FPR_GRID_POINTS)
        .map(|k| k as f64 / (FPR_GRID_POINTS - 1) as f64)
        .collect()
}

/// Averages curves vertically. The AUC statistics use each curve's own area.
pub fn average_curves(lambda2: f64, curves: &[RocCurve]) -> Result<AveragedRoc> {
    if curves.is_empty() {
        return Err(Error::param("replications", "at least one curve is required"));
    }
    let fpr = fpr_grid();
    let m = curves.len() as f64;
    let mean_tpr: Vec<f64> = fpr
        .iter()
        .map(|&f| curves.iter().map(|c| c.tpr_at(f)).sum::<f64>() / m)
        .collect();
    let auc_mean = curves.iter().map(|c| c.auc).sum::<f64>() / m;
    let auc_sd = if curves.len() > 1 {
        let ss: f64 = curves.iter().map(|c| (c.auc - auc_mean) * (c.auc - auc_mean)).sum();
        libm::sqrt(ss / (m - 1.0))
    } else {
        0.0
    };
    Ok(AveragedRoc {
        lambda2,
        fpr,
        mean_tpr,
        auc_mean,
        auc_sd,
        replications: curves.len(),
    })
}

/// A simulation study: fresh data per replication, one ROC per fusion weight.
#[derive(Debug, Clone, PartialEq)]
pub struct RocExperiment {
    pub sim: SimConfig,
    pub lambda1_grid: Vec<f64>,
    /// Nominal fusion weights; each is multiplied by `lambda2_scale` before fitting.
    pub lambda2_values: Vec<f64>,
    pub lambda2_scale: f64,
    pub replications: usize,
    pub scaling: Scaling,
    pub rule: EdgeRule,
    pub tol: f64,
    pub solver: SolverConfig,
    /// Also score plain neighborhood selection on the same data.
    pub baseline: Option<NeighborhoodConfig>,
}

impl RocExperiment {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.replications == 0 {
            return Err(Error::param("replications", "must be at least 1"));
        }
        if self.lambda1_grid.is_empty() || self.lambda2_values.is_empty() {
            return Err(Error::DegenerateGrid);
        }
        if self
            .lambda1_grid
            .iter()
            .chain(&self.lambda2_values)
            .chain([&self.lambda2_scale])
            .any(|v| !(*v >= 0.0) || !v.is_finite())
        {
            return Err(Error::param("grid", "values must be finite and nonnegative"));
        }
        self.solver.validate()
    }

    /// Simulation settings for replication `r` (seed derived from the master seed).
    pub fn replicate_sim(&self, r: usize) -> SimConfig {
        SimConfig {
            seed: replicate_seed(self.sim.seed, r as u64),
            ..self.sim.clone()
        }
    }
}

/// Fusion weight unit that spreads `λ₂` over the `p − 1` pairs each variable
/// belongs to.
pub fn per_pair_scale(p: usize) -> f64 {
    1.0 / (p.max(2) - 1) as f64
}

/// Curves of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateCurves {
    /// One curve per entry of `lambda2_values`.
    pub mglasso: Vec<RocCurve>,
    pub baseline: Option<RocCurve>,
}

/// One replication: fresh data, then every curve on it.
pub fn replicate_rocs(exp: &RocExperiment, r: usize) -> Result<ReplicateCurves> {
    let (truth, data) = exp.replicate_sim(r).generate()?;
    let x = data.standardize(exp.scaling)?;
    let support = truth.support();
    let mglasso = exp
        .lambda2_values
        .iter()
        .map(|&lambda2| {
            let est = MgLasso::new(lambda2 * exp.lambda2_scale, exp.solver.clone());
            roc_curve(&x, &support, &exp.lambda1_grid, &est, exp.rule, exp.tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let baseline = match &exp.baseline {
        Some(cfg) => {
            let est = Neighborhood { config: cfg.clone() };
            Some(roc_curve(&x, &support, &exp.lambda1_grid, &est, exp.rule, exp.tol)?)
        }
        None => None,
    };
    Ok(ReplicateCurves { mglasso, baseline })
}

/// Averaged curves of a whole experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RocSummary {
    pub mglasso: Vec<AveragedRoc>,
    pub baseline: Option<AveragedRoc>,
}

/// Averages replications produced in any order.
pub fn summarize(exp: &RocExperiment, replicates: &[ReplicateCurves]) -> Result<RocSummary> {
    let mut per_lambda2: Vec<Vec<RocCurve>> = vec![Vec::new(); exp.lambda2_values.len()];
    let mut baseline = Vec::new();
    for rep in replicates {
        for (k, c) in rep.mglasso.iter().enumerate() {
            per_lambda2[k].push(c.clone());
        }
        baseline.extend(rep.baseline.iter().cloned());
    }
    let mglasso = exp
        .lambda2_values
        .iter()
        .zip(&per_lambda2)
        .map(|(&l2, curves)| average_curves(l2, curves))
        .collect::<Result<Vec<_>>>()?;
    let baseline = if baseline.is_empty() {
        None
    } else {
        Some(average_curves(0.0, &baseline)?)
    };
    Ok(RocSummary { mglasso, baseline })
}

/// Runs every replication sequentially and averages per fusion weight.
pub fn averaged_roc(exp: &RocExperiment) -> Result<RocSummary> {
    exp.validate()?;
    let reps = (0..exp.replications)
        .map(|r| replicate_rocs(exp, r))
        .collect::<Result<Vec<_>>>()?;
    summarize(exp, &reps)
}

fn choose2(n: usize) -> f64 {
    let n = n as f64;
    n * (n - 1.0) / 2.0
}

/// Adjusted Rand index. Degenerate cases where the maximum equals the
/// expectation return 1 if the partitions agree and 0 otherwise.
pub fn adjusted_rand_index(a: &Partition, b: &Partition) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what: "partition",
            expected: a.len(),
            found: b.len(),
        });
    }
    let (ka, kb) = (a.num_clusters(), b.num_clusters());
    let mut table = vec![0usize; ka * kb];
    for (&la, &lb) in a.labels().iter().zip(b.labels()) {
        table[la * kb + lb] += 1;
    }
    let index: f64 = table.iter().map(|&c| choose2(c)).sum();
    let mut row = vec![0usize; ka];
    let mut col = vec![0usize; kb];
    for i in 0..ka {
        for j in 0..kb {
            row[i] += table[i * kb + j];
            col[j] += table[i * kb + j];
        }
    }
    let sa: f64 = row.iter().map(|&c| choose2(c)).sum();
    let sb: f64 = col.iter().map(|&c| choose2(c)).sum();
    let total = choose2(a.len());
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sa * sb / total;
    let max = 0.5 * (sa + sb);
    if max == expected {
        let same = ka == kb && table.iter().filter(|&&c| c > 0).count() == ka;
        return Ok(if same { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::GraphModel;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn graph_from_mask(p: usize, mask: &[bool]) -> Graph {
        let mut g = Graph::empty(p);
        let mut k = 0;
        for i in 0..p {
            for j in i + 1..p {
                g.set_edge(i, j, mask[k]);
                k += 1;
            }
        }
        g
    }

    /// Graphs keeping the pairs whose score exceeds each threshold, sparsest first.
    fn threshold_graphs(p: usize, scores: &[f64]) -> Vec<Option<Graph>> {
        let mut cuts: Vec<f64> = scores.to_vec();
        cuts.sort_by(|a, b| b.total_cmp(a));
        cuts.iter()
            .map(|&c| Some(graph_from_mask(p, &scores.iter().map(|&s| s >= c).collect::<Vec<_>>())))
            .collect()
    }

    #[test]
    fn confusion_examples() {
        let truth = Graph::from_edges(5, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        let same = confusion(&truth, &truth).unwrap();
        assert_eq!((same.false_pos, same.false_neg, same.true_pos), (0, 0, 3));
        let empty = confusion(&Graph::empty(5), &truth).unwrap();
        assert_eq!((empty.true_pos, empty.false_pos, empty.false_neg), (0, 0, 3));
        let full = confusion(&Graph::complete(5), &truth).unwrap();
        assert_eq!((full.true_neg, full.true_pos, full.false_pos), (0, 3, 7));
        assert_eq!(full.total(), 10);
        assert!(confusion(&Graph::empty(4), &truth).is_err());
    }

    #[test]
    fn empty_classes_use_convention() {
        let c = confusion(&Graph::empty(4), &Graph::empty(4)).unwrap();
        assert!(c.has_empty_class());
        assert_eq!((c.sensitivity(), c.specificity()), (1.0, 1.0));
    }

    #[test]
    fn perfect_and_trivial_curves() {
        let truth = Graph::from_edges(6, &[(0, 1), (2, 3), (4, 5), (1, 4)]).unwrap();
        let grid = [3.0, 2.0, 1.0];
        let perfect = RocCurve::from_graphs(&grid, &[Some(truth.clone()), Some(truth.clone()), Some(truth.clone())], &truth).unwrap();
        assert_eq!(perfect.auc, 1.0);
        let trivial = RocCurve::from_graphs(&grid, &[Some(Graph::empty(6)), None, Some(Graph::complete(6))], &truth).unwrap();
        assert_eq!(trivial.failed, vec![1]);
        assert!((trivial.auc - 0.5).abs() < 1e-15);
        assert_eq!(trivial.curve.first(), Some(&(0.0, 0.0)));
        assert_eq!(trivial.curve.last(), Some(&(1.0, 1.0)));
        assert!(RocCurve::from_graphs(&grid, &[None], &truth).is_err());
    }

    #[test]
    fn random_coin_estimator_is_uninformative() {
        let p = 80;
        let m = p * (p - 1) / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let truth = graph_from_mask(p, &(0..m).map(|_| rng.random::<f64>() < 0.1).collect::<Vec<_>>());
        let qs: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
        let graphs: Vec<Option<Graph>> = qs
            .iter()
            .map(|&q| Some(graph_from_mask(p, &(0..m).map(|_| rng.random::<f64>() < q).collect::<Vec<_>>())))
            .collect();
        let roc = RocCurve::from_graphs(&qs, &graphs, &truth).unwrap();
        assert!((roc.auc - 0.5).abs() <= 0.05, "{}", roc.auc);
    }

    #[test]
    fn single_replication_average_is_the_curve() {
        let truth = Graph::from_edges(5, &[(0, 1), (2, 3)]).unwrap();
        let scores = [0.9, 0.1, 0.3, 0.5, 0.2, 0.6, 0.7, 0.4, 0.8, 0.05];
        let graphs = threshold_graphs(5, &scores);
        let grid: Vec<f64> = (0..graphs.len()).map(|k| 10.0 - k as f64).collect();
        let roc = RocCurve::from_graphs(&grid, &graphs, &truth).unwrap();
        let avg = average_curves(0.0, core::slice::from_ref(&roc)).unwrap();
        assert_eq!(avg.auc_mean, roc.auc);
        assert_eq!(avg.auc_sd, 0.0);
        assert_eq!(avg.fpr.len(), FPR_GRID_POINTS);
        for (f, t) in avg.fpr.iter().zip(&avg.mean_tpr) {
            assert_eq!(*t, roc.tpr_at(*f));
        }
        assert!(average_curves(0.0, &[]).is_err());
    }

    #[test]
    fn interpolation_on_vertical_segments() {
        let roc = RocCurve::from_points(
            vec![
                RocPoint { lambda1: 2.0, fpr: 0.0, tpr: 0.5 },
                RocPoint { lambda1: 1.0, fpr: 0.5, tpr: 0.75 },
            ],
            vec![],
        );
        assert_eq!(roc.tpr_at(0.0), 0.5);
        assert!((roc.tpr_at(0.25) - 0.625).abs() < 1e-15);
        assert!((roc.tpr_at(0.75) - 0.875).abs() < 1e-15);
        assert!((roc.auc - (0.5 * 0.625 + 0.5 * 0.875)).abs() < 1e-15);
    }

    #[test]
    fn ari_examples() {
        let a = Partition::new(vec![0, 0, 1, 1]).unwrap();
        let b = Partition::new(vec![0, 1, 0, 1]).unwrap();
        assert_eq!(adjusted_rand_index(&a, &a).unwrap(), 1.0);
        assert!((adjusted_rand_index(&a, &b).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(adjusted_rand_index(&a, &Partition::single_cluster(4)).unwrap(), 0.0);
        assert_eq!(adjusted_rand_index(&Partition::singletons(4), &Partition::singletons(4)).unwrap(), 1.0);
        assert_eq!(adjusted_rand_index(&Partition::singletons(4), &Partition::single_cluster(4)).unwrap(), 0.0);
        assert!(adjusted_rand_index(&a, &Partition::singletons(3)).is_err());
    }

    #[test]
    fn experiment_validation() {
        let exp = RocExperiment {
            sim: SimConfig {
                p: 10,
                n: 20,
                model: GraphModel::ErdosRenyi { alpha: 0.2 },
                rho: 0.0,
                seed: 1,
            },
            lambda1_grid: vec![1.0, 0.5],
            lambda2_values: vec![0.0, 1.0],
            lambda2_scale: per_pair_scale(10),
            replications: 2,
            scaling: Scaling::UnitVariance,
            rule: EdgeRule::Or,
            tol: 1e-8,
            solver: SolverConfig::default(),
            baseline: Some(NeighborhoodConfig::default()),
        };
        assert!(exp.validate().is_ok());
        assert!((exp.lambda2_scale - 1.0 / 9.0).abs() < 1e-15);
        assert_ne!(exp.replicate_sim(0).seed, exp.replicate_sim(1).seed);
        assert!(RocExperiment { replications: 0, ..exp.clone() }.validate().is_err());
        assert!(RocExperiment { lambda1_grid: vec![], ..exp.clone() }.validate().is_err());
        assert!(RocExperiment { lambda2_values: vec![-1.0], ..exp.clone() }.validate().is_err());
        let summary = averaged_roc(&exp).unwrap();
        assert_eq!(summary.mglasso.len(), 2);
        assert_eq!(summary.mglasso[0].replications, 2);
        assert!(summary.baseline.is_some());
    }

    fn partition_strategy(p: usize) -> impl Strategy<Value = Vec<usize>> {
        proptest::collection::vec(0usize..4, p)
    }

    proptest! {
        #[test]
        fn ari_symmetric_and_label_invariant(a in partition_strategy(9), b in partition_strategy(9), shift in 1usize..4) {
            let pa = Partition::from_labels(&a);
            let pb = Partition::from_labels(&b);
            let ab = adjusted_rand_index(&pa, &pb).unwrap();
            prop_assert!((ab - adjusted_rand_index(&pb, &pa).unwrap()).abs() < 1e-12);
            let relabeled: Vec<usize> = a.iter().map(|l| (l + shift) % 4 + 10).collect();
            let pr = Partition::from_labels(&relabeled);
            prop_assert!((ab - adjusted_rand_index(&pr, &pb).unwrap()).abs() < 1e-12);
            prop_assert!(ab <= 1.0 + 1e-12);
        }

        #[test]
        fn confusion_partitions_pairs(est in proptest::collection::vec(any::<bool>(), 21), truth in proptest::collection::vec(any::<bool>(), 21)) {
            let c = confusion(&graph_from_mask(7, &est), &graph_from_mask(7, &truth)).unwrap();
            prop_assert_eq!(c.total(), 21);
            prop_assert!((0.0..=1.0).contains(&c.sensitivity()));
            prop_assert!((0.0..=1.0).contains(&c.specificity()));
        }

        #[test]
        fn auc_in_unit_interval(pts in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 0..10)) {
            let points = pts.iter().map(|&(fpr, tpr)| RocPoint { lambda1: 0.0, fpr, tpr }).collect();
            let roc = RocCurve::from_points(points, vec![]);
            prop_assert!((0.0..=1.0).contains(&roc.auc));
            prop_assert!(roc.curve.windows(2).all(|w| w[0].0 <= w[1].0));
        }

        #[test]
        fn reversed_scores_mirror_auc(
            scores in proptest::collection::hash_set(0u32..1_000_000, 28),
            truth_mask in proptest::collection::vec(any::<bool>(), 28),
        ) {
            prop_assume!(truth_mask.iter().any(|&t| t) && truth_mask.iter().any(|&t| !t));
            let s: Vec<f64> = scores.into_iter().map(|v| v as f64).collect();
            let rev: Vec<f64> = s.iter().map(|v| -v).collect();
            let truth = graph_from_mask(8, &truth_mask);
            let grid: Vec<f64> = (0..28).map(|k| 28.0 - k as f64).collect();
            let a = RocCurve::from_graphs(&grid, &threshold_graphs(8, &s), &truth).unwrap().auc;
            let b = RocCurve::from_graphs(&grid, &threshold_graphs(8, &rev), &truth).unwrap().auc;
            prop_assert!((a + b - 1.0).abs() <= 0.01, "{} + {}", a, b);
        }
    }
}

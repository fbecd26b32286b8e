//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero when any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::*;
use mglasso_core::evaluation::{per_pair_scale, replicate_rocs, summarize, RocExperiment, RocSummary};
use mglasso_core::model::max_aligned_difference;
use mglasso_core::neighborhood::{Neighborhood, NeighborhoodConfig};
use mglasso_core::objective::{objective_value, smoothed_fused_gradient, smoothed_fused_value};
use mglasso_core::solver::MgLasso;
use mglasso_core::stars::{lambda1_max, log_grid, StarsConfig};
use mglasso_core::*;
use nalgebra::DMatrix;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_instance(rng: &mut Xorshift, n: usize, p: usize) -> DataMatrix {
    DataMatrix::new(rng.matrix(n, p)).unwrap().standardize(Scaling::UnitNorm).unwrap()
}

/// Unfused solves against coordinate-descent lasso.
fn criterion_1() -> Outcome {
    let mut rng = Xorshift(0xc1);
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let p = 3 + k % 8;
        let n = 40 - 3 * (k % 5);
        let x = random_instance(&mut rng, n, p);
        let lambda1 = (0.05 + 0.4 * rng.next_f64().abs()) * lambda1_max(&x);
        let hp = Hyperparameters::new(lambda1, 0.0).unwrap();
        let (beta, _) = conesta_solve(&x, &hp, &SolverConfig::absolute(1e-12), None).unwrap();
        for i in 0..p {
            let (z, y) = split_column(x.values(), i);
            let cd = lasso_cd(&z, &y, lambda1, 1_000_000);
            for (a, b) in beta.row(i).iter().zip(&cd) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    outcome(worst <= 1e-4, format!("max |beta - beta_cd| = {worst:.2e} (tol 1e-4) over 20 instances"))
}

/// Certified gaps on tiny fused problems.
fn criterion_2() -> Outcome {
    let mut rng = Xorshift(0xc2);
    let mut worst_gap: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut certificate_ok = true;
    for k in 0..10 {
        let p = 2 + k % 3;
        let n = 5 + k % 4;
        let x = random_instance(&mut rng, n, p);
        let lambda1 = (0.02 + 0.2 * rng.next_f64().abs()) * lambda1_max(&x);
        let lambda2 = (0.05 + 0.3 * rng.next_f64().abs()) * path::lambda2_max_heuristic(&x);
        let hp = Hyperparameters::new(lambda1, lambda2).unwrap();
        let cfg = SolverConfig {
            max_outer: 200,
            max_inner: 100_000,
            ..SolverConfig::absolute(1e-9)
        };
        let (beta, diag) = conesta_solve(&x, &hp, &cfg, None).unwrap();
        let reference = SolverConfig {
            max_outer: 200,
            max_inner: 1_000_000,
            ..SolverConfig::absolute(1e-14)
        };
        let (long, _) = conesta_solve(&x, &hp, &reference, None).unwrap();
        let j = objective_value(&beta, &x, &hp).unwrap();
        let j_long = objective_value(&long, &x, &hp).unwrap();
        worst_gap = worst_gap.max(diag.final_duality_gap);
        worst_excess = worst_excess.max(j - j_long);
        certificate_ok &= j - j_long <= diag.final_duality_gap + 1e-12;
    }
    outcome(
        worst_gap <= 1e-8 && worst_excess <= 1e-7 && certificate_ok,
        format!(
            "max final gap {worst_gap:.2e} (tol 1e-8), max J - J_longrun {worst_excess:.2e} (tol 1e-7), gap bounds suboptimality: {certificate_ok}"
        ),
    )
}

/// Smoothing error bound and smoothed gradient.
fn criterion_3() -> Outcome {
    let mut rng = Xorshift(0xc3);
    let mut bound_ok = true;
    let mut worst_ratio: f64 = 0.0;
    for k in 0..100 {
        let p = 2 + k % 5;
        let op = DifferenceOperator::new(p, None).unwrap();
        let beta: Vec<f64> = (0..p * (p - 1)).map(|_| 2.0 * rng.next_f64()).collect();
        let s = op.block_norm_sum(&op.apply(&beta));
        for mu in [1.0, 0.1, 0.01] {
            let s_mu = smoothed_fused_value(&beta, &op, mu).unwrap();
            let allowed = mu * op.num_blocks() as f64 / 2.0;
            bound_ok &= (s - s_mu).abs() <= allowed * (1.0 + 1e-12);
            worst_ratio = worst_ratio.max((s - s_mu).abs() / allowed);
        }
    }
    let mut worst_rel: f64 = 0.0;
    for k in 0..100 {
        let p = 2 + k % 5;
        let mu = [1.0, 0.1, 0.01][k % 3];
        let op = DifferenceOperator::new(p, None).unwrap();
        let beta: Vec<f64> = (0..p * (p - 1)).map(|_| rng.next_f64()).collect();
        let g = smoothed_fused_gradient(&beta, &op, mu).unwrap();
        let fd = finite_difference(|b| smoothed_fused_value(b, &op, mu).unwrap(), &beta, 1e-6);
        let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        worst_rel = worst_rel.max(num / den);
    }
    outcome(
        bound_ok && worst_rel <= 1e-5,
        format!(
            "|s - s_mu| / (mu M / 2) <= {worst_ratio:.3} over 300 cases; max gradient rel. error {worst_rel:.2e} (tol 1e-5)"
        ),
    )
}

/// Complete fusion at a large fusion weight.
fn criterion_4() -> Outcome {
    let sim = SimConfig {
        p: 10,
        n: 30,
        model: GraphModel::StochasticBlock {
            pi: vec![0.5, 0.5],
            alpha_in: 0.75,
            alpha_out: 0.01,
        },
        rho: 0.3,
        seed: 4,
    };
    let (_, raw) = sim.generate().unwrap();
    let x = raw.standardize(Scaling::UnitNorm).unwrap();
    let cfg = PathConfig::default_for(&x);
    let lambda1 = 0.1 * lambda1_max(&x);
    let hp = Hyperparameters::new(lambda1, 1e4 * cfg.lambda2_start).unwrap();
    let (beta, diag) = conesta_solve(&x, &hp, &SolverConfig::default(), None).unwrap();
    let spread = max_aligned_difference(&beta);
    let h = mglasso_path(&x, lambda1, &cfg, &SolverConfig::default()).unwrap();
    let last = h.levels.last().map(|l| l.partition.num_clusters()).unwrap_or(0);
    outcome(
        spread <= 1e-3 && last == 1,
        format!(
            "max aligned difference {spread:.2e} (tol 1e-3, converged {}), path ends at K = {last} after {} levels",
            diag.converged,
            h.levels.len()
        ),
    )
}

/// Within-block correlation of complete blocks.
fn criterion_5() -> Outcome {
    let mut worst: f64 = 0.0;
    for rho in [0.1, 0.3] {
        for size in [4, 8, 20] {
            let sim = SimConfig {
                p: size,
                n: 10,
                model: GraphModel::StochasticBlock {
                    pi: vec![1.0],
                    alpha_in: 1.0,
                    alpha_out: 0.0,
                },
                rho,
                seed: size as u64,
            };
            let (truth, _) = sim.generate().unwrap();
            let sigma = truth.covariance().unwrap();
            for i in 0..size {
                for j in 0..size {
                    if i != j {
                        let c = sigma[(i, j)] / (sigma[(i, i)] * sigma[(j, j)]).sqrt();
                        worst = worst.max((c - rho).abs());
                    }
                }
            }
        }
    }
    outcome(worst <= 1e-10, format!("max |corr - rho| = {worst:.2e} (tol 1e-10)"))
}

const NOMINAL_LAMBDA2: [f64; 4] = [0.0, 3.33, 6.67, 10.0];

fn roc_experiment(model: GraphModel, n: usize) -> RocExperiment {
    RocExperiment {
        sim: SimConfig {
            p: 40,
            n,
            model,
            rho: 0.3,
            seed: 2024,
        },
        // under unit-variance scaling |(X^{∖i})ᵀXⁱ| ≤ n
        lambda1_grid: log_grid(0.6 * n as f64, 0.01, 15),
        lambda2_values: NOMINAL_LAMBDA2.to_vec(),
        lambda2_scale: per_pair_scale(40),
        replications: 10,
        scaling: Scaling::UnitVariance,
        rule: EdgeRule::Or,
        tol: 1e-8,
        solver: SolverConfig {
            eps_target: 1e-4,
            ..SolverConfig::default()
        },
        baseline: Some(NeighborhoodConfig {
            tol: 1e-8,
            ..NeighborhoodConfig::default()
        }),
    }
}

/// Averaged ROC study over three graph models and three sample sizes.
fn criterion_6() -> Outcome {
    let models = [
        GraphModel::default_sbm(),
        GraphModel::ErdosRenyi { alpha: 0.1 },
        GraphModel::ScaleFree { num_edges: 40 },
    ];
    let sizes = [20, 40, 80];
    let mut lines = Vec::new();
    let (mut a_ok, mut b_ok, mut c_ok) = (true, true, true);
    let mut worst_a: f64 = 0.0;
    for model in &models {
        let mut by_size: Vec<RocSummary> = Vec::new();
        for &n in &sizes {
            let exp = roc_experiment(model.clone(), n);
            exp.validate().unwrap();
            let reps: Vec<_> = (0..exp.replications).map(|r| replicate_rocs(&exp, r).unwrap()).collect();
            let summary = summarize(&exp, &reps).unwrap();
            let mb = summary.baseline.as_ref().unwrap().auc_mean;
            let aucs: Vec<String> = summary.mglasso.iter().map(|a| format!("{:.4}", a.auc_mean)).collect();
            lines.push(format!("    {} n/p={:.1}: MB {mb:.4}, lambda2 {:?} -> {}", model.name(), n as f64 / 40.0, NOMINAL_LAMBDA2, aucs.join(" ")));
            let diff = (summary.mglasso[0].auc_mean - mb).abs();
            worst_a = worst_a.max(diff);
            a_ok &= diff <= 0.02;
            if n == 80 && matches!(model, GraphModel::StochasticBlock { .. }) {
                c_ok &= summary.mglasso[1..].iter().all(|a| a.auc_mean >= mb - 0.01);
            }
            by_size.push(summary);
        }
        for k in 0..NOMINAL_LAMBDA2.len() {
            b_ok &= by_size.windows(2).all(|w| w[1].mglasso[k].auc_mean > w[0].mglasso[k].auc_mean);
        }
        b_ok &= by_size.windows(2).all(|w| {
            w[1].baseline.as_ref().unwrap().auc_mean > w[0].baseline.as_ref().unwrap().auc_mean
        });
    }
    let mut detail = format!(
        "(a) max |AUC(lambda2=0) - AUC(MB)| = {worst_a:.4} (tol 0.02): {a_ok}; (b) AUC increasing in n/p: {b_ok}; (c) SBM n/p=2 AUC(lambda2>0) >= AUC(MB) - 0.01: {c_ok}\n"
    );
    detail.push_str(&lines.join("\n"));
    outcome(a_ok && b_ok && c_ok, detail)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Partition recovery along the path.
fn criterion_7() -> Outcome {
    let mut med = Vec::new();
    let mut lines = Vec::new();
    for rho in [0.1, 0.3] {
        let mut ari20 = Vec::new();
        let mut ari10 = Vec::new();
        let mut ks = Vec::new();
        for r in 0..20u64 {
            let sim = SimConfig {
                p: 40,
                n: 80,
                model: GraphModel::default_sbm(),
                rho,
                seed: synthetic::replicate_seed(7, r),
            };
            let (truth, raw) = sim.generate().unwrap();
            let x = raw.standardize(Scaling::UnitVariance).unwrap();
            let sc = StarsConfig {
                scaling: Scaling::UnitVariance,
                seed: r,
                ..StarsConfig::default_for(&x)
            };
            let sel = select_lambda1(&x, &sc, &Neighborhood::default()).unwrap();
            let solver = SolverConfig {
                eps_target: 1e-4,
                ..SolverConfig::default()
            };
            let h = mglasso_path(&x, sel.lambda1, &PathConfig::default_for(&x), &solver).unwrap();
            for (k, out) in [(20, &mut ari20), (10, &mut ari10)] {
                let level = h.level_nearest(k).unwrap();
                out.push(adjusted_rand_index(&level.partition, &truth.labels).unwrap());
            }
            ks.push(h.levels.iter().map(|l| l.partition.num_clusters()).collect::<Vec<_>>());
        }
        let (m20, m10) = (median(&mut ari20), median(&mut ari10));
        let distinct: std::collections::BTreeSet<usize> = ks.iter().flatten().copied().collect();
        lines.push(format!(
            "    rho {rho}: median ARI near K=20 {m20:.3}, near K=10 {m10:.3}; cluster counts visited {distinct:?}"
        ));
        med.push((m20, m10));
    }
    let high = med[1];
    let level_ok = high.0 >= 0.3 && high.1 >= 0.3;
    let trend_ok = med[0].0 <= med[1].0 && med[0].1 <= med[1].1;
    outcome(
        level_ok && trend_ok,
        format!("median ARI >= 0.3 at rho 0.3: {level_ok}; nonincreasing as rho decreases: {trend_ok}\n{}", lines.join("\n")),
    )
}

/// Stability selection on data made of two duplicated rows.
fn criterion_8() -> Outcome {
    let signs = [1.0, -1.0, 1.0, 1.0, -1.0, 1.0];
    let values = DMatrix::from_fn(40, 6, |r, j| signs[j] * if r % 2 == 0 { 1.0 } else { -1.0 });
    let x = DataMatrix::new(values).unwrap();
    let sc = StarsConfig::default_for(&x.standardize(Scaling::UnitNorm).unwrap());
    let sel = select_lambda1(&x, &sc, &Neighborhood::default()).unwrap();
    let flat = sel.instabilities.iter().all(|&d| d == 0.0);
    let largest = sel.index == 0 && sel.lambda1 == sc.lambda1_grid[0];

    let sim = SimConfig {
        p: 15,
        n: 60,
        model: GraphModel::ErdosRenyi { alpha: 0.2 },
        rho: 0.0,
        seed: 8,
    };
    let (_, raw) = sim.generate().unwrap();
    let y = raw.standardize(Scaling::UnitNorm).unwrap();
    let cfg = StarsConfig {
        seed: 99,
        ..StarsConfig::default_for(&y)
    };
    let a = select_lambda1(&y, &cfg, &Neighborhood::default()).unwrap();
    let b = select_lambda1(&y, &cfg, &Neighborhood::default()).unwrap();
    let bits = |s: &StarsSelection| s.instabilities.iter().map(|d| d.to_bits()).collect::<Vec<_>>();
    let reproducible = a == b && bits(&a) == bits(&b) && format!("{a:?}") == format!("{b:?}");
    let bounded = a.instabilities.iter().chain(&sel.instabilities).all(|&d| (0.0..=0.5).contains(&d));
    outcome(
        flat && largest && reproducible && bounded,
        format!(
            "duplicated rows: all D = 0 {flat}, largest lambda1 selected {largest}; D in [0, 0.5] {bounded}; same seed identical {reproducible}"
        ),
    )
}

/// Exhaustive metric checks.
fn criterion_9() -> Outcome {
    let mut ari_cases = 0usize;
    let mut ari_ok = true;
    for p in 1..=6 {
        let parts = all_partitions(p);
        let lib: Vec<Partition> = parts.iter().map(|l| Partition::from_labels(l)).collect();
        for (a, la) in parts.iter().zip(&lib) {
            for (b, lb) in parts.iter().zip(&lib) {
                let v = adjusted_rand_index(la, lb).unwrap();
                ari_ok &= (v - ari_pairs(a, b)).abs() < 1e-12;
                ari_cases += 1;
            }
        }
    }
    let mut conf_cases = 0usize;
    let mut conf_ok = true;
    for p in 2..=6 {
        let pr = pairs(p);
        let m = pr.len();
        let graphs: Vec<Graph> = (0..1u32 << m)
            .map(|mask| {
                let edges: Vec<(usize, usize)> = (0..m).filter(|k| mask >> k & 1 == 1).map(|k| pr[k]).collect();
                Graph::from_edges(p, &edges).unwrap()
            })
            .collect();
        for (e, ge) in graphs.iter().enumerate() {
            for (t, gt) in graphs.iter().enumerate() {
                let c = confusion(ge, gt).unwrap();
                conf_ok &= (c.true_pos, c.false_pos, c.true_neg, c.false_neg) == confusion_masks(e as u32, t as u32, m);
                conf_cases += 1;
            }
        }
    }
    outcome(
        ari_ok && conf_ok,
        format!("ARI {ari_cases} partition pairs agree: {ari_ok}; confusion {conf_cases} graph pairs agree: {conf_ok}"),
    )
}

/// Edge table of a fused fit against the unfused one (reported only).
fn criterion_10() -> Outcome {
    let sim = SimConfig {
        p: 40,
        n: 80,
        model: GraphModel::default_sbm(),
        rho: 0.3,
        seed: 10,
    };
    let (_, raw) = sim.generate().unwrap();
    let x = raw.standardize(Scaling::UnitVariance).unwrap();
    let sc = StarsConfig {
        scaling: Scaling::UnitVariance,
        ..StarsConfig::default_for(&x)
    };
    let lambda1 = select_lambda1(&x, &sc, &Neighborhood::default()).unwrap().lambda1;
    let solver = SolverConfig::default();
    let fused = MgLasso::new(5.0 * per_pair_scale(40), solver.clone());
    let plain = MgLasso::new(0.0, solver);
    let (bf, _) = solver::GraphEstimator::fit(&fused, &x, lambda1, None).unwrap();
    let (bp, _) = solver::GraphEstimator::fit(&plain, &x, lambda1, None).unwrap();
    let gf = graph_from_beta(&bf, EdgeRule::Or, 1e-8);
    let gp = graph_from_beta(&bp, EdgeRule::Or, 1e-8);
    let c = confusion(&gf, &gp).unwrap();
    outcome(
        true,
        format!(
            "reported only: lambda1 {lambda1:.3}; fused edge & unfused edge {}, fused edge only {}, unfused edge only {}, neither {}; (fused non-edge, unfused edge) cell is zero: {}",
            c.true_pos,
            c.false_pos,
            c.false_neg,
            c.true_neg,
            c.false_neg == 0
        ),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 unfused solve equals coordinate-descent lasso", criterion_1),
        ("2 certified duality gap", criterion_2),
        ("3 smoothing bound and gradient", criterion_3),
        ("4 complete fusion at large lambda2", criterion_4),
        ("5 block correlation equals rho", criterion_5),
        ("6 averaged ROC study", criterion_6),
        ("7 partition recovery along the path", criterion_7),
        ("8 stability selection", criterion_8),
        ("9 exhaustive metric oracles", criterion_9),
        ("10 fused vs unfused edge table", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        let id = name.split(' ').next().unwrap();
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let label = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {name}: {label} [{:.1}s] {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

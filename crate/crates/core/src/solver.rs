//! Continuation with Nesterov smoothing around an accelerated proximal
//! gradient method.
//!
//! For a fixed smoothing parameter `μ` the fusion penalty is replaced by its
//! smooth surrogate and the problem `g + λ₂ s_μ + λ₁‖·‖₁` is solved by FISTA
//! (gradient step on the smooth part, soft-thresholding for the `ℓ1` part).
//! The outer loop shrinks `μ` as the duality gap of the original problem
//! decreases: with `M` fusion blocks the smoothing error is at most
//! `λ₂ μ M / 2`, so `μ = ε / (2 λ₂ M)` keeps it below `ε / 4`.

use alloc::vec;
use alloc::vec::Vec;

use crate::model::{DataMatrix, Hyperparameters, RegressionMatrix, SolveDiagnostics, Weights};
use crate::objective::{
    prox_l1_in_place, smoothed_blocks, smoothed_value, DifferenceOperator, GapScratch, Gaps, Problem,
};
use crate::polish::{face, polish};
use crate::{Error, Result};

/// Factor applied to the previous curvature estimate before each line search.
const LOCAL_DECREASE: f64 = 0.9;

/// Dual-refinement steps tried when the primal objective has stalled.
const DUAL_REFINE_ITERATIONS: usize = 300;

/// Face-identification thresholds tried by the Newton polish, relative to `max(1, ‖β‖∞)`.
const POLISH_THRESHOLDS: [f64; 4] = [1e-10, 1e-8, 1e-6, 1e-4];

/// Largest face dimension worth a dense Newton solve.
const POLISH_MAX_DIM: usize = 300;

/// Dual-refinement steps spent on a freshly polished point.
const POLISH_DUAL_ITERATIONS: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Target duality gap of the unsmoothed problem.
    pub eps_target: f64,
    /// When set, `eps_target` is relative to the objective at `β = 0`, `½ Σᵢ ‖Xⁱ‖²`.
    pub relative: bool,
    pub max_outer: usize,
    pub max_inner: usize,
    pub mu_floor: f64,
    pub continuation_factor: f64,
    /// Step is `step_safety / L`.
    pub step_safety: f64,
    /// Inner iterations between two duality-gap evaluations.
    pub gap_interval: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps_target: 1e-6,
            relative: true,
            max_outer: 50,
            max_inner: 10_000,
            mu_floor: 1e-12,
            continuation_factor: 0.5,
            step_safety: 1.0,
            gap_interval: 10,
        }
    }
}

impl SolverConfig {
    /// Absolute gap target `eps_target`.
    pub fn absolute(eps_target: f64) -> Self {
        SolverConfig {
            eps_target,
            relative: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_target > 0.0) {
            return Err(Error::param("eps_target", "must be positive"));
        }
        if !(self.continuation_factor > 0.0 && self.continuation_factor < 1.0) {
            return Err(Error::param("continuation_factor", "must lie in (0, 1)"));
        }
        if !(self.step_safety > 0.0 && self.step_safety <= 1.0) {
            return Err(Error::param("step_safety", "must lie in (0, 1]"));
        }
        if !(self.mu_floor > 0.0) {
            return Err(Error::param("mu_floor", "must be positive"));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::param("iterations", "max_outer and max_inner must be positive"));
        }
        if self.gap_interval == 0 {
            return Err(Error::param("gap_interval", "must be positive"));
        }
        Ok(())
    }
}

/// Step-size constant `L ≥ λ_max(blockdiag(X^{∖i}ᵀX^{∖i})) + λ₂ ‖D‖² / μ`.
///
/// The data part uses power iteration on `XᵀX` (whose top eigenvalue bounds
/// every principal block); a non-converged estimate is doubled.
pub fn lipschitz_bound(x: &DataMatrix, op: &DifferenceOperator, lambda2: f64, mu: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::param("mu", "smoothing parameter must be positive"));
    }
    if op.p() != x.p() {
        return Err(Error::DimensionMismatch {
            what: "difference operator",
            expected: x.p(),
            found: op.p(),
        });
    }
    let loss = crate::objective::QuadraticLoss::new(x);
    Ok(data_lipschitz(&loss) + smoothing_lipschitz(op, lambda2, mu))
}

fn data_lipschitz(loss: &crate::objective::QuadraticLoss) -> f64 {
    let (value, converged) = loss.max_eigenvalue();
    if converged {
        value * (1.0 + 1e-6)
    } else {
        2.0 * value
    }
}

fn smoothing_lipschitz(op: &DifferenceOperator, lambda2: f64, mu: f64) -> f64 {
    lambda2 * op.norm_squared() / mu
}

/// Outcome of one smoothed inner solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FistaDiagnostics {
    pub iterations: usize,
    /// Smoothed objective after every accepted step (nonincreasing).
    pub objective_trace: Vec<f64>,
    pub smoothed_gap: f64,
    pub original_gap: f64,
    pub restarts: usize,
    /// Stopped because the smoothed gap reached its tolerance (or the
    /// unsmoothed gap reached the outer target).
    pub converged: bool,
}

struct InnerRun {
    iterations: usize,
    gaps: Gaps,
    restarts: usize,
    converged: bool,
}

/// Preallocated FISTA buffers.
struct Fista<'a> {
    problem: &'a Problem,
    x: Vec<f64>,
    hx: Vec<f64>,
    zx: Vec<f64>,
    x_old: Vec<f64>,
    hx_old: Vec<f64>,
    zx_old: Vec<f64>,
    y: Vec<f64>,
    hy: Vec<f64>,
    zy: Vec<f64>,
    alpha: Vec<f64>,
    grad: Vec<f64>,
    cand: Vec<f64>,
    hc: Vec<f64>,
    zc: Vec<f64>,
    expanded: Vec<f64>,
    scratch: GapScratch,
    /// Curvature accepted by the last line search.
    local_l: f64,
}

impl<'a> Fista<'a> {
    fn new(problem: &'a Problem, x0: &[f64]) -> Self {
        let d = problem.dim();
        let zl = if problem.fused_active() { problem.z_len() } else { 0 };
        let mut f = Fista {
            problem,
            x: x0.to_vec(),
            hx: vec![0.0; d],
            zx: vec![0.0; zl],
            x_old: vec![0.0; d],
            hx_old: vec![0.0; d],
            zx_old: vec![0.0; zl],
            y: vec![0.0; d],
            hy: vec![0.0; d],
            zy: vec![0.0; zl],
            alpha: vec![0.0; zl],
            grad: vec![0.0; d],
            cand: vec![0.0; d],
            hc: vec![0.0; d],
            zc: vec![0.0; zl],
            expanded: vec![0.0; problem.loss.p()],
            scratch: problem.scratch(),
            local_l: 0.0,
        };
        problem.loss.gram_product(&f.x, &mut f.hx, &mut f.expanded);
        if problem.fused_active() {
            problem.op.apply_into(&f.x, &mut f.zx);
        }
        f
    }

    fn set_point(&mut self, x: &[f64]) {
        self.x.copy_from_slice(x);
        self.problem.loss.gram_product(&self.x, &mut self.hx, &mut self.expanded);
        if self.problem.fused_active() {
            self.problem.op.apply_into(&self.x, &mut self.zx);
        }
    }

    fn gaps(&mut self, mu: f64) -> Gaps {
        self.problem
            .gaps(&self.x, &self.hx, &self.zx, mu, &mut self.scratch)
    }

    /// Runs accelerated proximal gradient on the `μ`-smoothed problem from the
    /// current point until the smoothed gap is below `inner_eps`, the original
    /// gap is below `outer_eps`, or `max_inner` iterations are spent.
    #[allow(clippy::too_many_arguments)]
    fn run(
        &mut self,
        mu: f64,
        floor: f64,
        lipschitz: f64,
        step_safety: f64,
        inner_eps: f64,
        outer_eps: f64,
        max_inner: usize,
        gap_interval: usize,
        mut trace: Option<&mut Vec<f64>>,
    ) -> Result<InnerRun> {
        let pr = self.problem;
        let fused = pr.fused_active();
        let cross = pr.loss.cross();

        let mut gaps = self.gaps(mu);
        if gaps.smoothed <= inner_eps || gaps.original <= outer_eps {
            return Ok(InnerRun {
                iterations: 0,
                gaps,
                restarts: 0,
                converged: true,
            });
        }
        let mut fx = gaps.smoothed_objective;
        self.x_old.copy_from_slice(&self.x);
        self.hx_old.copy_from_slice(&self.hx);
        self.zx_old.copy_from_slice(&self.zx);
        let mut t = 1.0f64;
        let mut restarts = 0;
        let mut fresh = true;

        for it in 1..=max_inner {
            let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
            let m = (t - 1.0) / t_next;
            // the extrapolated point and its images follow by linearity
            extrapolate(&mut self.y, &self.x, &self.x_old, m);
            extrapolate(&mut self.hy, &self.hx, &self.hx_old, m);
            let mut f_y = pr.loss.value(&self.y, &self.hy);
            if fused {
                extrapolate(&mut self.zy, &self.zx, &self.zx_old, m);
                let (s_mu, _) = smoothed_blocks(&self.zy, pr.op.block_len(), mu, &mut self.alpha);
                f_y += pr.lambda2 * s_mu;
                pr.op.apply_transpose_into(&self.alpha, &mut self.grad);
                for ((g, &h), &c) in self.grad.iter_mut().zip(&self.hy).zip(cross) {
                    *g = h - c + pr.lambda2 * *g;
                }
            } else {
                for ((g, &h), &c) in self.grad.iter_mut().zip(&self.hy).zip(cross) {
                    *g = h - c;
                }
            }

            // backtracking on the local curvature, capped by the global bound
            let mut l = f64::max(floor, LOCAL_DECREASE * self.local_l).min(lipschitz);
            let fs_c = loop {
                let step = step_safety / l;
                for ((c, &y), &g) in self.cand.iter_mut().zip(&self.y).zip(&self.grad) {
                    *c = y - step * g;
                }
                prox_l1_in_place(&mut self.cand, pr.lambda1 * step);
                pr.loss.gram_product(&self.cand, &mut self.hc, &mut self.expanded);
                let mut fs = pr.loss.value(&self.cand, &self.hc);
                if fused {
                    pr.op.apply_into(&self.cand, &mut self.zc);
                    fs += pr.lambda2 * smoothed_value(&self.zc, pr.op.block_len(), mu);
                }
                if l >= lipschitz {
                    break fs;
                }
                let mut lin = 0.0;
                let mut sq = 0.0;
                for ((&c, &y), &g) in self.cand.iter().zip(&self.y).zip(&self.grad) {
                    let d = c - y;
                    lin += g * d;
                    sq += d * d;
                }
                let slack = 1e-13 * f64::max(1.0, f_y.abs());
                if fs <= f_y + lin + 0.5 * l * sq + slack {
                    break fs;
                }
                l = f64::min(2.0 * l, lipschitz);
            };
            self.local_l = l;
            let fc = fs_c + pr.lambda1 * crate::linalg::norm1(&self.cand);
            if !fc.is_finite() {
                return Err(Error::Divergence { iteration: it });
            }

            if fc > fx {
                if m == 0.0 {
                    // a plain proximal step no longer descends: numerical floor
                    gaps = self.gaps(mu);
                    return Ok(InnerRun {
                        iterations: it,
                        gaps,
                        restarts,
                        converged: gaps.smoothed <= inner_eps || gaps.original <= outer_eps,
                    });
                }
                // adaptive restart: drop momentum and retry from x
                restarts += 1;
                t = 1.0;
                self.x_old.copy_from_slice(&self.x);
                self.hx_old.copy_from_slice(&self.hx);
                self.zx_old.copy_from_slice(&self.zx);
                continue;
            }

            core::mem::swap(&mut self.x_old, &mut self.x);
            core::mem::swap(&mut self.hx_old, &mut self.hx);
            core::mem::swap(&mut self.zx_old, &mut self.zx);
            core::mem::swap(&mut self.x, &mut self.cand);
            core::mem::swap(&mut self.hx, &mut self.hc);
            core::mem::swap(&mut self.zx, &mut self.zc);
            fx = fc;
            t = t_next;
            fresh = false;
            if let Some(tr) = trace.as_deref_mut() {
                tr.push(fc);
            }

            if it % gap_interval == 0 || it == max_inner {
                gaps = self.gaps(mu);
                if gaps.smoothed <= inner_eps || gaps.original <= outer_eps {
                    return Ok(InnerRun {
                        iterations: it,
                        gaps,
                        restarts,
                        converged: true,
                    });
                }
            }
        }
        if !fresh {
            gaps = self.gaps(mu);
        }
        Ok(InnerRun {
            iterations: max_inner,
            gaps,
            restarts,
            converged: gaps.smoothed <= inner_eps || gaps.original <= outer_eps,
        })
    }
}

/// `out = x + m (x − x_old)`
#[inline]
fn extrapolate(out: &mut [f64], x: &[f64], x_old: &[f64], m: f64) {
    for ((o, &a), &b) in out.iter_mut().zip(x).zip(x_old) {
        *o = a + m * (a - b);
    }
}

fn check_start(beta0: Option<&RegressionMatrix>, p: usize) -> Result<Vec<f64>> {
    match beta0 {
        Some(b) if b.p() != p => Err(Error::DimensionMismatch {
            what: "initial regression matrix",
            expected: p,
            found: b.p(),
        }),
        Some(b) => {
            if b.as_slice().iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { what: "initial regression matrix" });
            }
            Ok(b.as_slice().to_vec())
        }
        None => Ok(vec![0.0; p * (p - 1)]),
    }
}

/// Approximate minimizer of the `μ`-smoothed objective `g + λ₁‖·‖₁ + λ₂ s_μ`
/// by FISTA with adaptive restart, started at `beta0`.
pub fn fista_solve(
    beta0: &RegressionMatrix,
    x: &DataMatrix,
    hp: &Hyperparameters,
    mu: f64,
    inner_eps: f64,
    max_inner: usize,
) -> Result<(RegressionMatrix, FistaDiagnostics)> {
    if !(mu > 0.0) {
        return Err(Error::param("mu", "smoothing parameter must be positive"));
    }
    let start = check_start(Some(beta0), x.p())?;
    let problem = Problem::new(x, hp)?;
    let lipschitz = data_lipschitz(&problem.loss) + smoothing_lipschitz(&problem.op, hp.lambda2, mu);
    let mut fista = Fista::new(&problem, &start);
    let mut trace = Vec::new();
    let floor = data_lipschitz(&problem.loss);
    let run = fista.run(mu, floor, lipschitz, 1.0, inner_eps, 0.0, max_inner, 1, Some(&mut trace))?;
    let beta = crate::model::devectorize(x.p(), fista.x)?;
    Ok((
        beta,
        FistaDiagnostics {
            iterations: run.iterations,
            objective_trace: trace,
            smoothed_gap: run.gaps.smoothed,
            original_gap: run.gaps.original,
            restarts: run.restarts,
            converged: run.converged,
        },
    ))
}

/// Solves the penalized problem for fixed `(λ₁, λ₂)`.
///
/// Returns the iterate with the lowest unsmoothed objective seen (never worse
/// than `beta0`) together with the smallest duality gap certified along the
/// way; any iterate's gap also bounds the suboptimality of a better one.
pub fn conesta_solve(
    x: &DataMatrix,
    hp: &Hyperparameters,
    cfg: &SolverConfig,
    beta0: Option<&RegressionMatrix>,
) -> Result<(RegressionMatrix, SolveDiagnostics)> {
    cfg.validate()?;
    let p = x.p();
    let start = check_start(beta0, p)?;
    let problem = Problem::new(x, hp)?;
    let data_l = data_lipschitz(&problem.loss);
    let eps_abs = if cfg.relative {
        cfg.eps_target * f64::max(0.5 * problem.loss.total(), f64::MIN_POSITIVE)
    } else {
        cfg.eps_target
    };
    let blocks = problem.op.num_blocks() as f64;
    let mu_of = |eps: f64| -> f64 {
        if hp.lambda2 > 0.0 {
            f64::max(cfg.mu_floor, eps / (2.0 * hp.lambda2 * blocks))
        } else {
            1.0
        }
    };

    let mut fista = Fista::new(&problem, &start);

    // the dual variables depend on μ; pick the μ that certifies the start best
    let mut gaps = fista.gaps(mu_of(eps_abs));
    if problem.fused_active() {
        for k in 1..=48 {
            let g = fista.gaps(mu_of(eps_abs * libm::ldexp(1.0, k)));
            if g.original < gaps.original {
                gaps = g;
            }
        }
    }
    let start_objective = gaps.objective;
    let mut diag = SolveDiagnostics {
        objective_trace: vec![start_objective],
        final_duality_gap: gaps.original,
        ..SolveDiagnostics::default()
    };
    let mut best_x = start.clone();
    let mut best_obj = start_objective;
    let mut best_gap = gaps.original;
    if best_gap <= eps_abs {
        diag.converged = true;
        return Ok((crate::model::devectorize(p, best_x)?, diag));
    }

    let mut eps = gaps.original;
    let mut prev_obj = start_objective;
    // stalled outer iterations to skip before the next dual refinement
    let (mut wait, mut backoff) = (0usize, 1usize);
    for _ in 0..cfg.max_outer {
        eps = f64::max(cfg.continuation_factor * eps, eps_abs);
        let mu = mu_of(eps);
        let lipschitz = data_l + smoothing_lipschitz(&problem.op, hp.lambda2, mu);
        let run = fista.run(
            mu,
            data_l,
            lipschitz,
            cfg.step_safety,
            0.75 * eps,
            eps_abs,
            cfg.max_inner,
            cfg.gap_interval,
            None,
        )?;
        diag.outer_iterations += 1;
        diag.iterations += run.iterations;
        diag.mu_trace.push(mu);
        diag.objective_trace.push(run.gaps.objective);
        best_gap = best_gap.min(run.gaps.original);
        let stalled = (prev_obj - run.gaps.objective).abs() < run.gaps.original;
        prev_obj = run.gaps.objective;
        if problem.fused_active() && best_gap > eps_abs && stalled {
            if wait == 0 {
                best_gap = best_gap.min(problem.refined_original_gap(&fista.x, mu, DUAL_REFINE_ITERATIONS, eps_abs));
                if best_gap > eps_abs {
                    let scale = f64::max(1.0, crate::linalg::norm_inf(&fista.x));
                    let mut polished = false;
                    let mut last_face = None;
                    for threshold in POLISH_THRESHOLDS {
                        if best_gap <= eps_abs {
                            break;
                        }
                        let cut = threshold * scale;
                        let classes = face(&problem, &fista.x, cut).0;
                        if last_face.as_ref() == Some(&classes) {
                            continue;
                        }
                        last_face = Some(classes);
                        let Some(c) = polish(&problem, &fista.x, cut, POLISH_MAX_DIM, mu, DUAL_REFINE_ITERATIONS, eps_abs)
                        else {
                            continue;
                        };
                        // a gap certifies every point with a lower objective too
                        best_gap = best_gap.min(c.gap);
                        if c.objective < best_obj {
                            best_obj = c.objective;
                            best_x.copy_from_slice(&c.x);
                            polished = true;
                        }
                    }
                    if polished && best_gap > eps_abs {
                        best_gap = best_gap.min(problem.refined_original_gap(&best_x, mu, POLISH_DUAL_ITERATIONS, eps_abs));
                    }
                    if best_obj < run.gaps.objective {
                        let bx = best_x.clone();
                        fista.set_point(&bx);
                    }
                }
                backoff *= 2;
                wait = backoff;
            } else {
                wait -= 1;
            }
        }
        if run.gaps.objective <= best_obj {
            best_obj = run.gaps.objective;
            best_x.copy_from_slice(&fista.x);
        }
        if best_gap <= eps_abs {
            diag.converged = true;
            break;
        }
        eps = eps.min(run.gaps.original);
    }
    diag.final_duality_gap = best_gap;
    Ok((crate::model::devectorize(p, best_x)?, diag))
}

/// A sparse graph estimator indexed by a sparsity level `λ₁`.
pub trait GraphEstimator {
    /// Fits the nodewise regressions at `lambda1`, optionally warm-started.
    fn fit(
        &self,
        x: &DataMatrix,
        lambda1: f64,
        warm: Option<&RegressionMatrix>,
    ) -> Result<(RegressionMatrix, SolveDiagnostics)>;
}

/// The fused estimator at a fixed fusion weight.
#[derive(Debug, Clone, PartialEq)]
pub struct MgLasso {
    pub lambda2: f64,
    pub weights: Option<Weights>,
    pub config: SolverConfig,
}

impl MgLasso {
    pub fn new(lambda2: f64, config: SolverConfig) -> Self {
        MgLasso {
            lambda2,
            weights: None,
            config,
        }
    }
}

impl GraphEstimator for MgLasso {
    fn fit(
        &self,
        x: &DataMatrix,
        lambda1: f64,
        warm: Option<&RegressionMatrix>,
    ) -> Result<(RegressionMatrix, SolveDiagnostics)> {
        let mut hp = Hyperparameters::new(lambda1, self.lambda2)?;
        hp.weights = self.weights.clone();
        conesta_solve(x, &hp, &self.config, warm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scaling;
    use nalgebra::{DMatrix, DVector};

    fn orthonormal() -> DataMatrix {
        DataMatrix::from_rows(&[
            [0.5, 0.5, 0.5],
            [0.5, -0.5, -0.5],
            [-0.5, 0.5, -0.5],
            [-0.5, -0.5, 0.5],
        ])
        .unwrap()
    }

    fn data() -> DataMatrix {
        DataMatrix::from_rows(&[
            [0.3, -1.2, 0.8, 0.1],
            [1.1, 0.4, -0.5, 0.9],
            [-0.7, 0.2, 0.3, -1.4],
            [0.5, 1.5, -1.1, 0.2],
            [-1.0, -0.6, 0.9, 0.4],
            [0.2, -0.1, 0.6, -0.8],
            [0.9, 0.3, -0.2, 0.5],
            [-0.4, 0.8, 0.1, -0.3],
        ])
        .unwrap()
        .standardize(Scaling::UnitNorm)
        .unwrap()
    }

    fn ols(x: &DataMatrix, i: usize) -> Vec<f64> {
        let v = x.values();
        let cols: Vec<usize> = (0..x.p()).filter(|&k| k != i).collect();
        let z = DMatrix::from_fn(x.n(), cols.len(), |r, c| v[(r, cols[c])]);
        let y: DVector<f64> = v.column(i).into_owned();
        let zt = z.transpose();
        (&zt * &z).lu().solve(&(&zt * y)).unwrap().iter().copied().collect()
    }

    #[test]
    fn lipschitz_on_orthonormal_columns() {
        let x = orthonormal();
        let op = DifferenceOperator::new(3, None).unwrap();
        let l = lipschitz_bound(&x, &op, 0.0, 1.0).unwrap();
        assert!((l - 1.0).abs() <= 0.05, "{l}");
    }

    #[test]
    fn lipschitz_smoothing_term_scales() {
        let x = data();
        let op = DifferenceOperator::new(4, None).unwrap();
        let base = lipschitz_bound(&x, &op, 0.0, 0.1).unwrap();
        let a = lipschitz_bound(&x, &op, 0.5, 0.1).unwrap() - base;
        let b = lipschitz_bound(&x, &op, 1.0, 0.1).unwrap() - base;
        let c = lipschitz_bound(&x, &op, 0.5, 0.05).unwrap() - base;
        assert!((b / a - 2.0).abs() < 1e-9);
        assert!((c / a - 2.0).abs() < 1e-9);
        assert!(lipschitz_bound(&x, &op, 0.5, 0.0).is_err());
    }

    #[test]
    fn fista_unpenalized_reaches_least_squares() {
        let x = data();
        let hp = Hyperparameters::new(0.0, 0.0).unwrap();
        let (beta, diag) = fista_solve(&RegressionMatrix::zeros(4), &x, &hp, 1.0, 1e-14, 200_000).unwrap();
        assert!(diag.converged);
        for i in 0..4 {
            let o = ols(&x, i);
            for (a, b) in beta.row(i).iter().zip(&o) {
                assert!((a - b).abs() <= 1e-4, "row {i}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn fista_full_shrinkage() {
        let x = data();
        let gram = crate::linalg::gram(x.values());
        let big = gram.iter().fold(0.0f64, |m, v| m.max(v.abs())) * 4.0;
        let hp = Hyperparameters::new(big, 0.0).unwrap();
        let (beta, _) = fista_solve(&RegressionMatrix::zeros(4), &x, &hp, 1.0, 1e-10, 1000).unwrap();
        assert!(beta.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fista_trace_is_monotone() {
        let x = data();
        let hp = Hyperparameters::new(0.05, 0.1).unwrap();
        let (_, diag) = fista_solve(&RegressionMatrix::zeros(4), &x, &hp, 1e-3, 1e-9, 5000).unwrap();
        assert!(diag.objective_trace.len() > 1);
        for w in diag.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn conesta_warm_start_at_solution() {
        let x = data();
        let hp = Hyperparameters::new(0.05, 0.1).unwrap();
        let cfg = SolverConfig::absolute(1e-8);
        let (beta, d1) = conesta_solve(&x, &hp, &cfg, None).unwrap();
        assert!(d1.converged, "{d1:?}");
        let (_, d2) = conesta_solve(&x, &hp, &cfg, Some(&beta)).unwrap();
        assert!(d2.converged);
        assert!(d2.outer_iterations <= 2, "{}", d2.outer_iterations);
    }

    #[test]
    fn conesta_never_worse_than_start() {
        let x = data();
        let hp = Hyperparameters::new(0.02, 0.3).unwrap();
        let start = crate::path::init_beta(&x);
        let cfg = SolverConfig {
            max_outer: 2,
            max_inner: 5,
            ..SolverConfig::default()
        };
        let (beta, _) = conesta_solve(&x, &hp, &cfg, Some(&start)).unwrap();
        let j0 = crate::objective::objective_value(&start, &x, &hp).unwrap();
        let j1 = crate::objective::objective_value(&beta, &x, &hp).unwrap();
        assert!(j1 <= j0);
    }

    #[test]
    fn conesta_is_deterministic() {
        let x = data();
        let hp = Hyperparameters::new(0.03, 0.2).unwrap();
        let cfg = SolverConfig::default();
        let (a, da) = conesta_solve(&x, &hp, &cfg, None).unwrap();
        let (b, db) = conesta_solve(&x, &hp, &cfg, None).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert_eq!(da, db);
    }

    #[test]
    fn conesta_reports_nonconvergence() {
        let x = data();
        let hp = Hyperparameters::new(0.01, 0.5).unwrap();
        let cfg = SolverConfig {
            max_outer: 1,
            max_inner: 2,
            gap_interval: 1,
            ..SolverConfig::absolute(1e-14)
        };
        let (_, diag) = conesta_solve(&x, &hp, &cfg, None).unwrap();
        assert!(!diag.converged);
        assert!(diag.final_duality_gap > 1e-14);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = [
            SolverConfig { eps_target: 0.0, ..SolverConfig::default() },
            SolverConfig { continuation_factor: 1.0, ..SolverConfig::default() },
            SolverConfig { step_safety: 1.5, ..SolverConfig::default() },
            SolverConfig { max_inner: 0, ..SolverConfig::default() },
            SolverConfig { mu_floor: 0.0, ..SolverConfig::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn mismatched_start_is_rejected() {
        let x = data();
        let hp = Hyperparameters::new(0.1, 0.1).unwrap();
        let wrong = RegressionMatrix::zeros(3);
        assert!(conesta_solve(&x, &hp, &SolverConfig::default(), Some(&wrong)).is_err());
    }
}

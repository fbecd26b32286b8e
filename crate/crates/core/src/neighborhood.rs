//! Plain neighborhood selection: one lasso per variable, solved by cyclic
//! coordinate descent on the Gram matrix.
//!
//! This is the comparator without fusion. It minimizes
//! `½ ‖Xⁱ − X^{∖i} b‖² + λ₁ ‖b‖₁` for every `i`; the `1/n`-scaled form
//! `(1/n) ‖Xⁱ − X^{∖i} b‖² + λ ‖b‖₁` is the same problem with `λ₁ = n λ / 2`
//! (see [`mb_to_lambda1`]).

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{dot, norm1, norm_inf};
use crate::model::{variable_at, DataMatrix, RegressionMatrix, SolveDiagnostics};
use crate::objective::QuadraticLoss;
use crate::solver::GraphEstimator;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborhoodConfig {
    /// Per-regression duality-gap target, relative to `½‖Xⁱ‖²`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for NeighborhoodConfig {
    fn default() -> Self {
        NeighborhoodConfig {
            tol: 1e-10,
            max_sweeps: 10_000,
        }
    }
}

/// Converts the `1/n`-scaled lasso weight into the `½`-scaled one.
pub fn mb_to_lambda1(lambda_mb: f64, n: usize) -> f64 {
    lambda_mb * n as f64 / 2.0
}

/// Lasso duality gap of one regression with gradient-free quantities
/// `q = c − Hb` (correlation with the residual) and `‖r‖²`.
fn lasso_gap(b: &[f64], q: &[f64], r2: f64, lambda1: f64) -> f64 {
    let q_inf = norm_inf(q);
    let s = if q_inf <= lambda1 { 1.0 } else { lambda1 / q_inf };
    let gap = 0.5 * (1.0 - s) * (1.0 - s) * r2 + lambda1 * norm1(b) - s * dot(q, b);
    gap.max(0.0)
}

/// Fits all `p` lasso regressions at `lambda1` (½-scaled).
pub fn neighborhood_selection(
    x: &DataMatrix,
    lambda1: f64,
    cfg: &NeighborhoodConfig,
    warm: Option<&RegressionMatrix>,
) -> Result<(RegressionMatrix, SolveDiagnostics)> {
    if !(lambda1 >= 0.0) {
        return Err(Error::param("lambda1", "must be nonnegative"));
    }
    let p = x.p();
    if let Some(w) = warm {
        if w.p() != p {
            return Err(Error::DimensionMismatch {
                what: "initial regression matrix",
                expected: p,
                found: w.p(),
            });
        }
    }
    let loss = QuadraticLoss::new(x);
    let g = loss.gram();
    // without the ℓ1 term the residual-based dual point certifies nothing;
    // strong convexity does (every principal block is at least this convex)
    let sigma = if lambda1 == 0.0 {
        loss.min_eigenvalue().max(0.0)
    } else {
        0.0
    };
    let mut beta = warm.cloned().unwrap_or_else(|| RegressionMatrix::zeros(p));
    let mut diag = SolveDiagnostics {
        converged: true,
        ..SolveDiagnostics::default()
    };
    let w = p - 1;
    let mut q = vec![0.0; w];
    let mut total_gap = 0.0;
    let mut total_obj = 0.0;
    for i in 0..p {
        let gii = g[i * p + i];
        let target = cfg.tol * 0.5 * gii;
        let c = &loss.cross()[i * w..(i + 1) * w];
        let vars: Vec<usize> = (0..w).map(|s| variable_at(i, s)).collect();
        let b = beta.row_mut(i);
        // q = c − H b
        for s in 0..w {
            let a = vars[s];
            q[s] = c[s] - (0..w).map(|t| g[a * p + vars[t]] * b[t]).sum::<f64>();
        }
        // ‖r‖² = Gᵢᵢ − 2bᵀc + bᵀHb with Hb = c − q
        let r2 = |b: &[f64], q: &[f64]| gii - dot(b, c) - dot(b, q);
        let bound = |b: &[f64], q: &[f64]| {
            let gap = lasso_gap(b, q, r2(b, q), lambda1);
            if sigma > 0.0 {
                gap.min(dot(q, q) / (2.0 * sigma))
            } else {
                gap
            }
        };
        let mut sweeps = 0;
        let mut gap = bound(b, &q);
        while gap > target && sweeps < cfg.max_sweeps {
            for s in 0..w {
                let a = vars[s];
                let h = g[a * p + a];
                if h <= 0.0 {
                    continue;
                }
                let old = b[s];
                let rho = q[s] + h * old;
                let new = if rho > lambda1 {
                    (rho - lambda1) / h
                } else if rho < -lambda1 {
                    (rho + lambda1) / h
                } else {
                    0.0
                };
                let delta = new - old;
                if delta != 0.0 {
                    b[s] = new;
                    for t in 0..w {
                        q[t] -= g[vars[t] * p + a] * delta;
                    }
                }
            }
            sweeps += 1;
            gap = bound(b, &q);
        }
        diag.iterations += sweeps;
        if gap > target {
            diag.converged = false;
        }
        total_gap += gap;
        total_obj += 0.5 * r2(b, &q).max(0.0) + lambda1 * norm1(b);
    }
    diag.final_duality_gap = total_gap;
    diag.objective_trace.push(total_obj);
    Ok((beta, diag))
}

/// Neighborhood selection as a [`GraphEstimator`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Neighborhood {
    pub config: NeighborhoodConfig,
}

impl GraphEstimator for Neighborhood {
    fn fit(
        &self,
        x: &DataMatrix,
        lambda1: f64,
        warm: Option<&RegressionMatrix>,
    ) -> Result<(RegressionMatrix, SolveDiagnostics)> {
        neighborhood_selection(x, lambda1, &self.config, warm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scaling;
    use crate::solver::{conesta_solve, SolverConfig};
    use crate::Hyperparameters;

    fn data() -> DataMatrix {
        DataMatrix::from_rows(&[
            [0.3, -1.2, 0.8, 0.1],
            [1.1, 0.4, -0.5, 0.9],
            [-0.7, 0.2, 0.3, -1.4],
            [0.5, 1.5, -1.1, 0.2],
            [-1.0, -0.6, 0.9, 0.4],
            [0.2, -0.1, 0.6, -0.8],
            [0.9, 0.3, -0.2, 0.5],
        ])
        .unwrap()
        .standardize(Scaling::UnitNorm)
        .unwrap()
    }

    #[test]
    fn scaling_conversion() {
        assert_eq!(mb_to_lambda1(0.1, 50), 2.5);
    }

    #[test]
    fn unpenalized_fit_is_least_squares() {
        let x = data();
        let cfg = NeighborhoodConfig {
            tol: 1e-15,
            max_sweeps: 100_000,
        };
        let (beta, diag) = neighborhood_selection(&x, 0.0, &cfg, None).unwrap();
        assert!(diag.converged);
        let ols = crate::path::init_beta(&x);
        for (a, b) in beta.as_slice().iter().zip(ols.as_slice()) {
            assert!((a - b).abs() < 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn agrees_with_the_unfused_solver() {
        let x = data();
        for lambda1 in [0.01, 0.1, 0.3] {
            let (mb, diag) = neighborhood_selection(&x, lambda1, &NeighborhoodConfig::default(), None).unwrap();
            assert!(diag.converged);
            let hp = Hyperparameters::new(lambda1, 0.0).unwrap();
            let (beta, _) = conesta_solve(&x, &hp, &SolverConfig::absolute(1e-12), None).unwrap();
            for (a, b) in beta.as_slice().iter().zip(mb.as_slice()) {
                assert!((a - b).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn warm_start_reaches_the_same_point() {
        let x = data();
        let cfg = NeighborhoodConfig::default();
        let (cold, _) = neighborhood_selection(&x, 0.05, &cfg, None).unwrap();
        let (start, _) = neighborhood_selection(&x, 0.2, &cfg, None).unwrap();
        let (warm, _) = neighborhood_selection(&x, 0.05, &cfg, Some(&start)).unwrap();
        for (a, b) in cold.as_slice().iter().zip(warm.as_slice()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let x = data();
        let cfg = NeighborhoodConfig::default();
        assert!(neighborhood_selection(&x, -1.0, &cfg, None).is_err());
        assert!(neighborhood_selection(&x, 0.1, &cfg, Some(&RegressionMatrix::zeros(3))).is_err());
    }
}

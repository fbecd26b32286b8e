//! Newton refinement restricted to the face of a solution.
//!
//! Near an optimum the zero coefficients and the fused blocks are usually
//! identified long before the remaining coordinates are accurate. On the face
//! they define, coefficients tied by a fused block are equal, zero ones stay
//! at zero, and the objective is smooth, so a damped Newton method resolves
//! the free coordinates to rounding precision. The result is accepted only
//! through its objective and duality gap, so a wrongly guessed face costs
//! time but never correctness.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::linalg::{norm2, norm_inf, pinv_solve};
use crate::objective::Problem;

const NEWTON_ITERATIONS: usize = 30;
const LINE_SEARCH_HALVINGS: usize = 40;

/// A refined point, its objective and a certified gap.
#[derive(Debug, Clone)]
pub(crate) struct Polished {
    pub x: Vec<f64>,
    pub objective: f64,
    pub gap: f64,
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

/// Coefficient classes of the face: `class[k]` is `None` for coefficients
/// held at zero, otherwise the index of the free parameter driving `x[k]`.
pub(crate) fn face(problem: &Problem, x: &[f64], threshold: f64) -> (Vec<Option<usize>>, Vec<f64>) {
    let op = &problem.op;
    let dim = x.len();
    let mut parent: Vec<usize> = (0..dim).collect();
    if problem.fused_active() {
        let z = op.apply(x);
        let bl = op.block_len();
        for (b, &(i, j)) in op.pairs().iter().enumerate() {
            if norm2(&z[b * bl..(b + 1) * bl]) <= threshold {
                for s in 0..bl {
                    let (a, c) = op.block_entry(i, j, s);
                    let (ra, rc) = (find(&mut parent, a), find(&mut parent, c));
                    parent[ra] = rc;
                }
            }
        }
    }
    let mut sum = vec![0.0; dim];
    let mut count = vec![0usize; dim];
    for (k, &v) in x.iter().enumerate().take(dim) {
        let r = find(&mut parent, k);
        sum[r] += v;
        count[r] += 1;
    }
    let mut id = vec![None; dim];
    let mut theta = Vec::new();
    let mut class = vec![None; dim];
    for (k, slot) in class.iter_mut().enumerate() {
        let r = find(&mut parent, k);
        let mean = sum[r] / count[r] as f64;
        if mean.abs() <= threshold {
            continue;
        }
        let c = *id[r].get_or_insert_with(|| {
            theta.push(mean);
            theta.len() - 1
        });
        *slot = Some(c);
    }
    (class, theta)
}

fn expand(class: &[Option<usize>], theta: &[f64], out: &mut [f64]) {
    for (o, c) in out.iter_mut().zip(class) {
        *o = c.map_or(0.0, |c| theta[c]);
    }
}

/// Damped Newton on the face of `x` identified with `threshold`. Returns
/// `None` when the face has more than `max_dim` free parameters. The gap of
/// the result is refined until it reaches `target`.
pub(crate) fn polish(
    problem: &Problem,
    x: &[f64],
    threshold: f64,
    max_dim: usize,
    mu: f64,
    dual_iterations: usize,
    target: f64,
) -> Option<Polished> {
    let (class, mut theta) = face(problem, x, threshold);
    let m = theta.len();
    if m > max_dim {
        return None;
    }
    let dim = x.len();
    let p = problem.loss.p();
    let w = p - 1;
    let op = &problem.op;
    let bl = op.block_len();
    let gram = problem.loss.gram();
    let cross = problem.loss.cross();
    let sign: Vec<f64> = theta.iter().map(|t| t.signum()).collect();

    let mut beta = vec![0.0; dim];
    let mut hx = vec![0.0; dim];
    let mut expanded = vec![0.0; p];
    let mut z = vec![0.0; if problem.fused_active() { problem.z_len() } else { 0 }];
    let mut scratch = problem.scratch();
    let mut evaluate = |theta: &[f64], beta: &mut Vec<f64>, hx: &mut Vec<f64>, z: &mut Vec<f64>| -> f64 {
        expand(&class, theta, beta);
        problem.loss.gram_product(beta, hx, &mut expanded);
        if problem.fused_active() {
            op.apply_into(beta, z);
        }
        problem.gaps(beta, hx, z, 1.0, &mut scratch).objective
    };
    let mut obj = evaluate(&theta, &mut beta, &mut hx, &mut z);

    let mut unit = vec![0.0; z.len()];
    let mut dt = vec![0.0; dim];
    for _ in 0..NEWTON_ITERATIONS {
        if m == 0 {
            break;
        }
        let mut hess = DMatrix::<f64>::zeros(m, m);
        // least squares: row i of β̃ sees G restricted to the other variables
        for i in 0..p {
            for s in 0..w {
                let Some(cs) = class[i * w + s] else { continue };
                let a = crate::model::variable_at(i, s);
                for t in 0..w {
                    if let Some(ct) = class[i * w + t] {
                        hess[(cs, ct)] += gram[a * p + crate::model::variable_at(i, t)];
                    }
                }
            }
        }
        unit.iter_mut().for_each(|u| *u = 0.0);
        if problem.fused_active() {
            for (b, &(i, j)) in op.pairs().iter().enumerate() {
                let zb = &z[b * bl..(b + 1) * bl];
                let nb = norm2(zb);
                if nb == 0.0 {
                    continue;
                }
                let wb = op.pair_weight(b);
                for (u, v) in unit[b * bl..(b + 1) * bl].iter_mut().zip(zb) {
                    *u = v / nb;
                }
                let ub = &unit[b * bl..(b + 1) * bl];
                // λ₂ D_bᵀ (I − u uᵀ) D_b / ‖z_b‖
                let scale = problem.lambda2 * wb * wb / nb;
                for s in 0..bl {
                    let (as_, cs_) = op.block_entry(i, j, s);
                    for t in 0..bl {
                        let (at, ct) = op.block_entry(i, j, t);
                        let coef = scale * (if s == t { 1.0 } else { 0.0 } - ub[s] * ub[t]);
                        if coef == 0.0 {
                            continue;
                        }
                        for (r, sr) in [(class[as_], 1.0), (class[cs_], -1.0)] {
                            let Some(r) = r else { continue };
                            for (c, sc) in [(class[at], 1.0), (class[ct], -1.0)] {
                                if let Some(c) = c {
                                    hess[(r, c)] += sr * sc * coef;
                                }
                            }
                        }
                    }
                }
            }
            op.apply_transpose_into(&unit, &mut dt);
        }
        let mut grad = DVector::<f64>::zeros(m);
        for k in 0..dim {
            if let Some(c) = class[k] {
                grad[c] += hx[k] - cross[k] + problem.lambda1 * sign[c] + problem.lambda2 * dt[k];
            }
        }
        let step = match hess.clone().cholesky() {
            Some(ch) => ch.solve(&(-&grad)),
            None => pinv_solve(&hess, &(-&grad)),
        };
        let mut t = 1.0;
        let mut trial = theta.clone();
        let (mut tb, mut th, mut tz) = (beta.clone(), hx.clone(), z.clone());
        let mut accepted = false;
        for _ in 0..LINE_SEARCH_HALVINGS {
            for c in 0..m {
                trial[c] = theta[c] + t * step[c];
            }
            let o = evaluate(&trial, &mut tb, &mut th, &mut tz);
            if o < obj {
                obj = o;
                theta.copy_from_slice(&trial);
                core::mem::swap(&mut beta, &mut tb);
                core::mem::swap(&mut hx, &mut th);
                core::mem::swap(&mut z, &mut tz);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        let moved = t * norm_inf(step.as_slice());
        if !accepted || moved <= 1e-15 * (1.0 + norm_inf(&theta)) {
            break;
        }
    }
    let gap = problem.refined_original_gap(&beta, mu, dual_iterations, target);
    Some(Polished {
        x: beta,
        objective: obj,
        gap,
    })
}

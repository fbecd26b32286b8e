//! The penalized neighborhood-selection criterion
//!
//! ```text
//! J(β) = ½ Σᵢ ‖Xⁱ − X^{∖i} βⁱ‖² + λ₁ Σᵢ ‖βⁱ‖₁ + λ₂ Σ_{i<j} w_ij ‖βⁱ − τ_ij(βʲ)‖₂
//! ```
//!
//! together with its pieces: the gradient of the least-squares part, the
//! soft-thresholding prox of the `ℓ1` term, the Nesterov-smoothed fusion
//! penalty and a Fenchel duality gap.
//!
//! The fusion term is `s(β̃) = Σ_b ‖(Dβ̃)_b‖₂` with one block `b` per pair
//! `i < j`. Its smoothed version is `s_μ(β̃) = max_{α ∈ K} αᵀDβ̃ − μ/2 ‖α‖²`
//! where `K` is the product of per-block unit balls.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{dot, gram, norm1, norm2, power_iteration};
use crate::model::{slot, variable_at, DataMatrix, Hyperparameters, RegressionMatrix, Weights};
use crate::{Error, Result};

/// Dual-refinement steps between two gap evaluations.
const REFINE_CHECK_INTERVAL: usize = 25;

/// Refinement stops when a window of this many steps improves the gap by
/// less than `REFINE_MIN_PROGRESS` (relative).
const REFINE_WINDOW: usize = 400;
const REFINE_MIN_PROGRESS: f64 = 5e-3;

/// The linear map `β̃ ↦ (w_ij (βⁱ − τ_ij(βʲ)))_{i<j}`, one block of length `p − 1` per pair.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceOperator {
    p: usize,
    pairs: Vec<(usize, usize)>,
    weights: Vec<f64>,
    norm_sq: f64,
}

impl DifferenceOperator {
    pub fn new(p: usize, weights: Option<&Weights>) -> Result<Self> {
        if p < 2 {
            return Err(Error::param("p", "at least two variables are required"));
        }
        if let Some(w) = weights {
            if w.p() != p {
                return Err(Error::DimensionMismatch {
                    what: "weight matrix",
                    expected: p,
                    found: w.p(),
                });
            }
        }
        let mut pairs = Vec::with_capacity(p * (p - 1) / 2);
        let mut ws = Vec::with_capacity(p * (p - 1) / 2);
        for i in 0..p {
            for j in i + 1..p {
                pairs.push((i, j));
                ws.push(weights.map_or(1.0, |w| w.get(i, j)));
            }
        }
        let mut op = DifferenceOperator {
            p,
            pairs,
            weights: ws,
            norm_sq: 0.0,
        };
        op.norm_sq = match weights {
            // closed form of ‖D‖² for unit weights
            None if p == 2 => 2.0,
            None => (p + 1) as f64,
            Some(_) => op.estimate_norm_sq(),
        };
        Ok(op)
    }

    fn estimate_norm_sq(&self) -> f64 {
        // Gershgorin on DᵀD, a weighted graph Laplacian over coefficients
        let mut degree = vec![0.0; self.dim()];
        for (b, &(i, j)) in self.pairs.iter().enumerate() {
            let w2 = self.weights[b] * self.weights[b];
            for s in 0..self.p - 1 {
                let (a, c) = self.block_entry(i, j, s);
                degree[a] += w2;
                degree[c] += w2;
            }
        }
        let gershgorin = 2.0 * degree.iter().fold(0.0f64, |m, &d| m.max(d));
        let mut z = vec![0.0; self.num_blocks() * self.block_len()];
        let est = power_iteration(self.dim(), 1e-10, 2000, |v, out| {
            self.apply_into(v, &mut z);
            self.apply_transpose_into(&z, out);
        });
        if est.converged {
            f64::min(est.value * (1.0 + 1e-6), gershgorin)
        } else {
            gershgorin
        }
    }

    /// Flat indices of the `+w` and `−w` coefficients of row `s` in block `(i, j)`.
    #[inline]
    pub(crate) fn block_entry(&self, i: usize, j: usize, s: usize) -> (usize, usize) {
        let w = self.p - 1;
        let k = variable_at(i, s);
        let partner = if k == j { i } else { k };
        (i * w + s, j * w + slot(j, partner))
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn num_blocks(&self) -> usize {
        self.pairs.len()
    }

    pub fn block_len(&self) -> usize {
        self.p - 1
    }

    /// Length of the flattened coefficient vector, `p (p − 1)`.
    pub fn dim(&self) -> usize {
        self.p * (self.p - 1)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair_weight(&self, block: usize) -> f64 {
        self.weights[block]
    }

    /// Upper bound on the squared spectral norm `‖D‖₂²`.
    pub fn norm_squared(&self) -> f64 {
        self.norm_sq
    }

    pub fn apply(&self, beta_vec: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.num_blocks() * self.block_len()];
        self.apply_into(beta_vec, &mut z);
        z
    }

    pub fn apply_into(&self, beta_vec: &[f64], z: &mut [f64]) {
        let w = self.p - 1;
        debug_assert_eq!(beta_vec.len(), self.dim());
        for (b, &(i, j)) in self.pairs.iter().enumerate() {
            let wij = self.weights[b];
            let ri = &beta_vec[i * w..(i + 1) * w];
            let rj = &beta_vec[j * w..(j + 1) * w];
            let out = &mut z[b * w..(b + 1) * w];
            // slots before i and after j name the same variable in both rows,
            // slots in between are shifted by one in row j, and slot j − 1 of
            // row i (variable j) pairs with slot i of row j (variable i)
            for s in 0..i {
                out[s] = wij * (ri[s] - rj[s]);
            }
            for s in i..j - 1 {
                out[s] = wij * (ri[s] - rj[s + 1]);
            }
            out[j - 1] = wij * (ri[j - 1] - rj[i]);
            for s in j..w {
                out[s] = wij * (ri[s] - rj[s]);
            }
        }
    }

    pub fn apply_transpose(&self, alpha: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_transpose_into(alpha, &mut out);
        out
    }

    pub fn apply_transpose_into(&self, alpha: &[f64], out: &mut [f64]) {
        let w = self.p - 1;
        out.iter_mut().for_each(|x| *x = 0.0);
        for (b, &(i, j)) in self.pairs.iter().enumerate() {
            let wij = self.weights[b];
            let a = &alpha[b * w..(b + 1) * w];
            for (o, &v) in out[i * w..(i + 1) * w].iter_mut().zip(a) {
                *o += wij * v;
            }
            let rj = &mut out[j * w..(j + 1) * w];
            for s in 0..i {
                rj[s] -= wij * a[s];
            }
            for s in i..j - 1 {
                rj[s + 1] -= wij * a[s];
            }
            rj[i] -= wij * a[j - 1];
            for s in j..w {
                rj[s] -= wij * a[s];
            }
        }
    }

    /// `Σ_b ‖z_b‖₂` for `z = Dβ̃`.
    pub fn block_norm_sum(&self, z: &[f64]) -> f64 {
        z.chunks_exact(self.block_len()).map(norm2).sum()
    }
}

/// Maximizer of the smoothed fusion penalty for a given `z = Dβ̃`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedPenaltyState {
    pub mu: f64,
    /// One dual vector per block, each inside the closed unit ball.
    pub alpha_star: Vec<f64>,
    /// `s_μ` at `z`.
    pub value: f64,
    /// `Σ_b ‖z_b‖₂`, the unsmoothed penalty.
    pub unsmoothed: f64,
}

impl SmoothedPenaltyState {
    pub fn new(z: &[f64], block_len: usize, mu: f64) -> Self {
        let mut alpha_star = vec![0.0; z.len()];
        let (value, unsmoothed) = smoothed_blocks(z, block_len, mu, &mut alpha_star);
        SmoothedPenaltyState {
            mu,
            alpha_star,
            value,
            unsmoothed,
        }
    }

    pub fn alpha_norm_sq(&self) -> f64 {
        dot(&self.alpha_star, &self.alpha_star)
    }
}

/// Per block: `α_b = z_b / max(μ, ‖z_b‖)`, value `‖z_b‖ − μ/2` or `‖z_b‖²/(2μ)`.
/// Returns `(s_μ, s)`.
pub(crate) fn smoothed_blocks(z: &[f64], block_len: usize, mu: f64, alpha: &mut [f64]) -> (f64, f64) {
    let mut value = 0.0;
    let mut plain = 0.0;
    for (zb, ab) in z.chunks_exact(block_len).zip(alpha.chunks_exact_mut(block_len)) {
        let nz = norm2(zb);
        plain += nz;
        let scale = if nz >= mu {
            value += nz - 0.5 * mu;
            1.0 / nz
        } else {
            value += nz * nz / (2.0 * mu);
            1.0 / mu
        };
        for (a, &x) in ab.iter_mut().zip(zb) {
            *a = x * scale;
        }
    }
    (value, plain)
}

/// `s_μ(z)` alone.
pub(crate) fn smoothed_value(z: &[f64], block_len: usize, mu: f64) -> f64 {
    z.chunks_exact(block_len)
        .map(|zb| {
            let sq = dot(zb, zb);
            let nz = libm::sqrt(sq);
            if nz >= mu {
                nz - 0.5 * mu
            } else {
                sq / (2.0 * mu)
            }
        })
        .sum()
}

/// Componentwise soft-thresholding `sign(v)·max(|v| − t, 0)`.
pub fn prox_l1(v: &[f64], threshold: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    prox_l1_in_place(&mut out, threshold);
    out
}

pub fn prox_l1_in_place(v: &mut [f64], threshold: f64) {
    for x in v.iter_mut() {
        let a = x.abs() - threshold;
        *x = if a > 0.0 { a.copysign(*x) } else { 0.0 };
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::param("mu", "smoothing parameter must be positive"))
    }
}

fn check_dims(beta_len: usize, op: &DifferenceOperator) -> Result<()> {
    if beta_len != op.dim() {
        return Err(Error::DimensionMismatch {
            what: "flattened regression matrix",
            expected: op.dim(),
            found: beta_len,
        });
    }
    Ok(())
}

pub fn smoothed_fused_value(beta_vec: &[f64], op: &DifferenceOperator, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    check_dims(beta_vec.len(), op)?;
    let z = op.apply(beta_vec);
    Ok(SmoothedPenaltyState::new(&z, op.block_len(), mu).value)
}

/// `Dᵀα*(β̃)`; Lipschitz with constant `‖D‖²/μ`.
pub fn smoothed_fused_gradient(beta_vec: &[f64], op: &DifferenceOperator, mu: f64) -> Result<Vec<f64>> {
    check_mu(mu)?;
    check_dims(beta_vec.len(), op)?;
    let z = op.apply(beta_vec);
    let state = SmoothedPenaltyState::new(&z, op.block_len(), mu);
    Ok(op.apply_transpose(&state.alpha_star))
}

fn check_beta(beta: &RegressionMatrix, x: &DataMatrix) -> Result<()> {
    if beta.p() != x.p() {
        return Err(Error::DimensionMismatch {
            what: "regression matrix",
            expected: x.p(),
            found: beta.p(),
        });
    }
    Ok(())
}

/// Residual of regression `i`: `Xⁱ − X^{∖i} βⁱ`.
fn residual(beta: &RegressionMatrix, x: &DataMatrix, i: usize) -> nalgebra::DVector<f64> {
    let v = x.values();
    let mut r = v.column(i).clone_owned();
    for (s, &b) in beta.row(i).iter().enumerate() {
        if b != 0.0 {
            r.axpy(-b, &v.column(variable_at(i, s)), 1.0);
        }
    }
    r
}

/// Evaluates `J(β)` from the raw data (no Gram shortcut).
pub fn objective_value(beta: &RegressionMatrix, x: &DataMatrix, hp: &Hyperparameters) -> Result<f64> {
    check_beta(beta, x)?;
    let p = x.p();
    let mut quad = 0.0;
    for i in 0..p {
        quad += 0.5 * residual(beta, x, i).norm_squared();
    }
    let l1 = norm1(beta.as_slice());
    let fused = if hp.lambda2 > 0.0 {
        let op = DifferenceOperator::new(p, hp.weights.as_ref())?;
        op.block_norm_sum(&op.apply(beta.as_slice()))
    } else {
        0.0
    };
    let value = quad + hp.lambda1 * l1 + hp.lambda2 * fused;
    if !value.is_finite() {
        return Err(Error::NonFinite { what: "objective" });
    }
    Ok(value)
}

/// Gradient of `½ Σᵢ ‖Xⁱ − X^{∖i} βⁱ‖²`, row `i` being `−(X^{∖i})ᵀ(Xⁱ − X^{∖i} βⁱ)`.
pub fn smooth_gradient(beta: &RegressionMatrix, x: &DataMatrix) -> Result<RegressionMatrix> {
    check_beta(beta, x)?;
    let p = x.p();
    let v = x.values();
    let mut g = RegressionMatrix::zeros(p);
    for i in 0..p {
        let r = residual(beta, x, i);
        for (s, out) in g.row_mut(i).iter_mut().enumerate() {
            *out = -v.column(variable_at(i, s)).dot(&r);
        }
    }
    Ok(g)
}

/// Least-squares part expressed through the Gram matrix `G = XᵀX`.
#[derive(Debug, Clone)]
pub(crate) struct QuadraticLoss {
    p: usize,
    gram: Vec<f64>,
    /// `c_i = (X^{∖i})ᵀ Xⁱ`, flattened like β̃.
    cross: Vec<f64>,
    /// `Σᵢ ‖Xⁱ‖²`
    total: f64,
}

impl QuadraticLoss {
    pub fn new(x: &DataMatrix) -> Self {
        let p = x.p();
        let gram = gram(x.values());
        let w = p - 1;
        let mut cross = vec![0.0; p * w];
        for i in 0..p {
            for s in 0..w {
                cross[i * w + s] = gram[variable_at(i, s) * p + i];
            }
        }
        let total = (0..p).map(|i| gram[i * p + i]).sum();
        QuadraticLoss {
            p,
            gram,
            cross,
            total,
        }
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn gram(&self) -> &[f64] {
        &self.gram
    }

    pub fn cross(&self) -> &[f64] {
        &self.cross
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Row `i` of the output is `G_{∖i,∖i} βⁱ`.
    pub fn gram_product(&self, beta_vec: &[f64], out: &mut [f64], expanded: &mut [f64]) {
        let p = self.p;
        let w = p - 1;
        for i in 0..p {
            let row = &beta_vec[i * w..(i + 1) * w];
            expanded[..i].copy_from_slice(&row[..i]);
            expanded[i] = 0.0;
            expanded[i + 1..p].copy_from_slice(&row[i..]);
            let o = &mut out[i * w..(i + 1) * w];
            for (s, os) in o.iter_mut().enumerate() {
                let a = variable_at(i, s);
                *os = dot(&self.gram[a * p..(a + 1) * p], &expanded[..p]);
            }
        }
    }

    /// `½ Σᵢ ‖Xⁱ − X^{∖i}βⁱ‖²` given the Gram product of β̃.
    pub fn value(&self, beta_vec: &[f64], product: &[f64]) -> f64 {
        let v = 0.5 * (self.total - 2.0 * dot(beta_vec, &self.cross) + dot(beta_vec, product));
        v.max(0.0)
    }

    /// Largest eigenvalue of `G`, bounding every block `G_{∖i,∖i}`.
    pub fn max_eigenvalue(&self) -> (f64, bool) {
        let p = self.p;
        let est = power_iteration(p, 1e-6, 500, |v, out| {
            for (a, o) in out.iter_mut().enumerate() {
                *o = dot(&self.gram[a * p..(a + 1) * p], v);
            }
        });
        (est.value, est.converged)
    }

    /// Smallest eigenvalue of `G` (a lower bound on the strong convexity of the loss).
    pub fn min_eigenvalue(&self) -> f64 {
        let m = nalgebra::DMatrix::from_row_slice(self.p, self.p, &self.gram);
        crate::linalg::min_eigenvalue(&m)
    }
}

/// Duality gaps at a point, for the smoothed and for the original problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Gaps {
    pub smoothed: f64,
    pub original: f64,
    /// Unsmoothed objective at the point.
    pub objective: f64,
    /// Smoothed objective at the point.
    pub smoothed_objective: f64,
}

struct DualTerms {
    scale: f64,
    r2: f64,
    quad: f64,
    l1: f64,
    lambda1: f64,
    w_dot_x: f64,
    v_sq: f64,
}

impl DualTerms {
    /// Gap contributions of the loss and the `ℓ1` term for the scaled dual point.
    fn common(&self) -> f64 {
        let s = self.scale;
        0.5 * (1.0 - s) * (1.0 - s) * self.r2 + self.lambda1 * self.l1 - s * self.w_dot_x
    }
}

/// Everything needed to evaluate objectives, gradients and gaps of one
/// `(X, λ₁, λ₂, w)` instance.
#[derive(Debug, Clone)]
pub(crate) struct Problem {
    pub loss: QuadraticLoss,
    pub op: DifferenceOperator,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Strong convexity of the loss, only needed when `λ₁ = 0`.
    pub strong_convexity: f64,
}

/// Scratch buffers for [`Problem::gaps`].
#[derive(Debug, Clone)]
pub(crate) struct GapScratch {
    alpha: Vec<f64>,
    dt_alpha: Vec<f64>,
}

impl Problem {
    pub fn new(x: &DataMatrix, hp: &Hyperparameters) -> Result<Self> {
        let loss = QuadraticLoss::new(x);
        let op = DifferenceOperator::new(x.p(), hp.weights.as_ref())?;
        let strong_convexity = if hp.lambda1 == 0.0 {
            loss.min_eigenvalue().max(0.0)
        } else {
            0.0
        };
        Ok(Problem {
            loss,
            op,
            lambda1: hp.lambda1,
            lambda2: hp.lambda2,
            strong_convexity,
        })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn z_len(&self) -> usize {
        self.op.num_blocks() * self.op.block_len()
    }

    pub fn scratch(&self) -> GapScratch {
        GapScratch {
            alpha: vec![0.0; self.z_len()],
            dt_alpha: vec![0.0; self.dim()],
        }
    }

    pub fn fused_active(&self) -> bool {
        self.lambda2 > 0.0
    }

    /// Duality gaps at `x` given its Gram product `hx` and `z = Dx`.
    ///
    /// The dual point is built from the residuals and the smoothed dual
    /// variables, scaled into the feasible set `‖X̃ᵀu − λ₂Dᵀα‖∞ ≤ λ₁`.
    pub fn gaps(&self, x: &[f64], hx: &[f64], z: &[f64], mu: f64, scratch: &mut GapScratch) -> Gaps {
        let (s_mu, s_plain, alpha_sq) = if self.fused_active() {
            let (v, s) = smoothed_blocks(z, self.op.block_len(), mu, &mut scratch.alpha);
            self.op.apply_transpose_into(&scratch.alpha, &mut scratch.dt_alpha);
            (v, s, dot(&scratch.alpha, &scratch.alpha))
        } else {
            scratch.dt_alpha.iter_mut().for_each(|v| *v = 0.0);
            (0.0, 0.0, 0.0)
        };
        let t = self.dual_terms(x, hx, &scratch.dt_alpha);
        let common = t.common();
        let mut smoothed = common + self.lambda2 * (s_mu + 0.5 * mu * t.scale * t.scale * alpha_sq);
        let mut original = common + self.lambda2 * s_plain;
        if self.lambda1 == 0.0 && self.strong_convexity > 0.0 {
            let bound = t.v_sq / (2.0 * self.strong_convexity);
            let smoothing = self.lambda2 * mu * self.op.num_blocks() as f64 / 2.0;
            smoothed = smoothed.min(bound);
            original = original.min(bound + smoothing);
        }
        Gaps {
            smoothed: smoothed.max(0.0),
            original: original.max(0.0),
            objective: t.quad + self.lambda1 * t.l1 + self.lambda2 * s_plain,
            smoothed_objective: t.quad + self.lambda1 * t.l1 + self.lambda2 * s_mu,
        }
    }

    fn dual_terms(&self, x: &[f64], hx: &[f64], dt_alpha: &[f64]) -> DualTerms {
        let cross = self.loss.cross();
        // v = X̃ᵀr − λ₂Dᵀα, X̃ᵀr = c − Hx
        let mut w_dot_x = 0.0;
        let mut v_inf: f64 = 0.0;
        let mut v_sq = 0.0;
        for k in 0..x.len() {
            let w = cross[k] - hx[k];
            w_dot_x += w * x[k];
            let v = w - self.lambda2 * dt_alpha[k];
            v_inf = v_inf.max(v.abs());
            v_sq += v * v;
        }
        let quad = self.loss.value(x, hx);
        let scale = if v_inf <= self.lambda1 {
            1.0
        } else {
            self.lambda1 / v_inf
        };
        DualTerms {
            scale,
            r2: 2.0 * quad,
            quad,
            l1: norm1(x),
            lambda1: self.lambda1,
            w_dot_x,
            v_sq,
        }
    }

    /// Original-problem gap at `x` after improving the dual variables.
    ///
    /// Starting from the smoothed maximizer, `α` is moved by accelerated
    /// projected gradient on `½ Σₖ (|vₖ| − λ₁)₊²` with `v = X̃ᵀr − λ₂Dᵀα`,
    /// which drives the dual point towards feasibility without rescaling.
    /// Blocks fused at the solution need this: there the smoothed `α` is
    /// only accurate once `‖Dx‖` is resolved to the order of `μ`.
    ///
    /// Stops early once the gap is at most `target`, or when it stalls.
    pub fn refined_original_gap(&self, x: &[f64], mu: f64, iterations: usize, target: f64) -> f64 {
        let mut hx = vec![0.0; self.dim()];
        let mut expanded = vec![0.0; self.loss.p()];
        self.loss.gram_product(x, &mut hx, &mut expanded);
        let mut scratch = self.scratch();
        if !self.fused_active() {
            let z = vec![0.0; self.z_len()];
            return self.gaps(x, &hx, &z, mu, &mut scratch).original;
        }
        let z = self.op.apply(x);
        let mut best = self.gaps(x, &hx, &z, mu, &mut scratch).original;
        let s_plain = self.op.block_norm_sum(&z);
        let cross = self.loss.cross();
        let w: Vec<f64> = cross.iter().zip(&hx).map(|(c, h)| c - h).collect();
        let step = 1.0 / (self.lambda2 * self.lambda2 * self.op.norm_squared());
        let bl = self.op.block_len();

        let mut alpha = scratch.alpha.clone();
        let mut prev = alpha.clone();
        let mut y = alpha.clone();
        let mut dt = vec![0.0; self.dim()];
        let mut excess = vec![0.0; self.dim()];
        let mut d_excess = vec![0.0; self.z_len()];
        let evaluate = |alpha: &[f64], dt: &mut [f64]| -> f64 {
            self.op.apply_transpose_into(alpha, dt);
            let terms = self.dual_terms(x, &hx, dt);
            let mut refined = terms.common() + self.lambda2 * s_plain;
            if self.lambda1 == 0.0 && self.strong_convexity > 0.0 {
                // P(x) − P* ≤ λ₂(S(z) − ⟨α, z⟩) + ‖v‖² / (2σ)
                let slack = self.lambda2 * (s_plain - dot(alpha, &z)).max(0.0);
                refined = refined.min(slack + terms.v_sq / (2.0 * self.strong_convexity));
            }
            refined.max(0.0)
        };
        if best <= target {
            return best;
        }
        let mut t = 1.0f64;
        let mut window_start = best;
        for it in 1..=iterations {
            if it % REFINE_CHECK_INTERVAL == 0 {
                best = best.min(evaluate(&alpha, &mut dt));
                if best <= target {
                    return best;
                }
            }
            if it % REFINE_WINDOW == 0 {
                if best > (1.0 - REFINE_MIN_PROGRESS) * window_start {
                    return best;
                }
                window_start = best;
            }
            self.op.apply_transpose_into(&y, &mut dt);
            let mut any = false;
            for k in 0..dt.len() {
                let v = w[k] - self.lambda2 * dt[k];
                let e = (v.abs() - self.lambda1).max(0.0);
                excess[k] = if v < 0.0 { -e } else { e };
                any |= e > 0.0;
            }
            if !any {
                alpha.copy_from_slice(&y);
                break;
            }
            self.op.apply_into(&excess, &mut d_excess);
            prev.copy_from_slice(&alpha);
            for ((a, yv), de) in alpha.iter_mut().zip(&y).zip(&d_excess) {
                *a = yv + step * self.lambda2 * de;
            }
            for ab in alpha.chunks_exact_mut(bl) {
                let nb = norm2(ab);
                if nb > 1.0 {
                    ab.iter_mut().for_each(|v| *v /= nb);
                }
            }
            let t_next = 0.5 * (1.0 + libm::sqrt(1.0 + 4.0 * t * t));
            let m = (t - 1.0) / t_next;
            for ((yv, a), p) in y.iter_mut().zip(&alpha).zip(&prev) {
                *yv = a + m * (a - p);
            }
            t = t_next;
        }
        best.min(evaluate(&alpha, &mut dt))
    }

    /// Gaps at `x` computed from scratch.
    pub fn gaps_at(&self, x: &[f64], mu: f64) -> Gaps {
        let mut hx = vec![0.0; self.dim()];
        let mut expanded = vec![0.0; self.loss.p()];
        self.loss.gram_product(x, &mut hx, &mut expanded);
        let z = if self.fused_active() {
            self.op.apply(x)
        } else {
            vec![0.0; self.z_len()]
        };
        let mut scratch = self.scratch();
        self.gaps(x, &hx, &z, mu, &mut scratch)
    }
}

/// Nonnegative upper bound on the suboptimality of `β` for the `μ`-smoothed problem.
pub fn duality_gap(beta: &RegressionMatrix, x: &DataMatrix, hp: &Hyperparameters, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    check_beta(beta, x)?;
    let problem = Problem::new(x, hp)?;
    Ok(problem.gaps_at(beta.as_slice(), mu).smoothed)
}

/// Same bound for the original, unsmoothed problem.
pub fn duality_gap_unsmoothed(beta: &RegressionMatrix, x: &DataMatrix, hp: &Hyperparameters) -> Result<f64> {
    check_beta(beta, x)?;
    let problem = Problem::new(x, hp)?;
    // μ only enters the starting dual variables; any positive value gives a valid bound
    Ok(problem.refined_original_gap(beta.as_slice(), 1e-8, 2000, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::devectorize;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    fn small_data() -> DataMatrix {
        DataMatrix::from_rows(&[
            [0.3, -1.2, 0.8, 0.1],
            [1.1, 0.4, -0.5, 0.9],
            [-0.7, 0.2, 0.3, -1.4],
            [0.5, 1.5, -1.1, 0.2],
            [-1.0, -0.6, 0.9, 0.4],
            [0.2, -0.1, 0.6, -0.8],
        ])
        .unwrap()
    }

    #[test]
    fn objective_at_zero_is_half_total_sum_of_squares() {
        let x = small_data();
        let hp = Hyperparameters::new(0.7, 1.3).unwrap();
        let v = objective_value(&RegressionMatrix::zeros(4), &x, &hp).unwrap();
        assert!((v - 0.5 * x.values().norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn objective_on_ones_matrix() {
        // X = 1 (3x3), β = 0.1 everywhere: residual 0.8 per entry, 9 entries
        let x = DataMatrix::new(DMatrix::from_element(3, 3, 1.0)).unwrap();
        let beta = devectorize(3, vec![0.1; 6]).unwrap();
        let hp = Hyperparameters::new(0.5, 2.0).unwrap();
        let expected = 0.5 * 9.0 * 0.64 + 0.5 * 0.6;
        assert!((objective_value(&beta, &x, &hp).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn prox_examples() {
        assert_eq!(prox_l1(&[3.0, -0.5, -2.0], 1.0), vec![2.0, 0.0, -1.0]);
        assert_eq!(prox_l1(&[3.0, -0.5], 0.0), vec![3.0, -0.5]);
    }

    #[test]
    fn smoothed_value_branches() {
        let op = DifferenceOperator::new(2, None).unwrap();
        // p = 2: one block z = β¹₂ − β²₁
        assert_eq!(smoothed_fused_value(&[0.0, 0.0], &op, 1.0).unwrap(), 0.0);
        assert!((smoothed_fused_value(&[3.0, 0.0], &op, 1.0).unwrap() - 2.5).abs() < 1e-15);
        assert!((smoothed_fused_value(&[0.5, 0.0], &op, 1.0).unwrap() - 0.125).abs() < 1e-15);
        assert!(smoothed_fused_value(&[0.5, 0.0], &op, 0.0).is_err());
        assert!(smoothed_fused_gradient(&[0.5, 0.0], &op, -1.0).is_err());
    }

    #[test]
    fn operator_indicator_pattern() {
        let p = 4;
        let op = DifferenceOperator::new(p, None).unwrap();
        assert_eq!(op.num_blocks(), 6);
        for k in 0..op.dim() {
            let mut e = vec![0.0; op.dim()];
            e[k] = 1.0;
            let z = op.apply(&e);
            // coefficient k of row i appears in the p − 1 blocks involving i
            assert_eq!(z.iter().filter(|v| **v != 0.0).count(), p - 1);
        }
        for b in 0..op.num_blocks() {
            for r in 0..op.block_len() {
                let mut a = vec![0.0; op.num_blocks() * op.block_len()];
                a[b * op.block_len() + r] = 1.0;
                let row = op.apply_transpose(&a);
                let mut nz: Vec<f64> = row.iter().copied().filter(|v| *v != 0.0).collect();
                nz.sort_by(f64::total_cmp);
                assert_eq!(nz, vec![-1.0, 1.0]);
            }
        }
    }

    #[test]
    fn operator_norm_closed_form() {
        for p in 2..8 {
            let op = DifferenceOperator::new(p, None).unwrap();
            let expected = if p == 2 { 2.0 } else { (p + 1) as f64 };
            assert!((op.norm_squared() - expected).abs() < 1e-9 * expected, "p = {p}");
        }
    }

    #[test]
    fn gradient_vanishes_at_least_squares() {
        let x = small_data().standardize(crate::model::Scaling::UnitNorm).unwrap();
        let beta = crate::path::init_beta(&x);
        let g = smooth_gradient(&beta, &x).unwrap();
        assert!(g.as_slice().iter().all(|v| v.abs() <= 1e-8));
        let g0 = smooth_gradient(&RegressionMatrix::zeros(4), &x).unwrap();
        let gram = crate::linalg::gram(x.values());
        for i in 0..4 {
            for s in 0..3 {
                let k = crate::model::variable_at(i, s);
                assert!((g0.row(i)[s] + gram[k * 4 + i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gap_positive_at_zero_and_small_at_solution() {
        let x = small_data().standardize(crate::model::Scaling::UnitNorm).unwrap();
        let hp = Hyperparameters::new(0.05, 0.02).unwrap();
        assert!(duality_gap(&RegressionMatrix::zeros(4), &x, &hp, 1e-3).unwrap() > 0.0);
        let cfg = crate::solver::SolverConfig::absolute(1e-12);
        let (beta, _) = crate::solver::conesta_solve(&x, &hp, &cfg, None).unwrap();
        assert!(duality_gap_unsmoothed(&beta, &x, &hp).unwrap() <= 1e-6);
    }

    fn instance() -> impl Strategy<Value = (usize, Vec<f64>, Vec<f64>)> {
        (2usize..7).prop_flat_map(|p| {
            (
                Just(p),
                proptest::collection::vec(-2.0f64..2.0, p * (p - 1)),
                proptest::collection::vec(-2.0f64..2.0, p * (p - 1)),
            )
        })
    }

    proptest! {
        #[test]
        fn operator_is_linear((p, u, v) in instance(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let op = DifferenceOperator::new(p, None).unwrap();
            let mix: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
            let lhs = op.apply(&mix);
            let (du, dv) = (op.apply(&u), op.apply(&v));
            for k in 0..lhs.len() {
                prop_assert!((lhs[k] - a * du[k] - b * dv[k]).abs() <= 1e-12);
            }
        }

        #[test]
        fn smoothing_gap_bounded((p, u, _) in instance(), mu in 1e-3f64..1.0) {
            let op = DifferenceOperator::new(p, None).unwrap();
            let s = op.block_norm_sum(&op.apply(&u));
            let smu = smoothed_fused_value(&u, &op, mu).unwrap();
            prop_assert!(s - smu >= -1e-12);
            prop_assert!(s - smu <= mu * op.num_blocks() as f64 / 2.0 + 1e-12);
        }

        #[test]
        fn smoothed_value_nonincreasing_in_mu((p, u, _) in instance()) {
            let op = DifferenceOperator::new(p, None).unwrap();
            let vals: Vec<f64> = [1e-3, 1e-2, 0.1, 1.0]
                .iter()
                .map(|&mu| smoothed_fused_value(&u, &op, mu).unwrap())
                .collect();
            for w in vals.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12);
            }
        }

        #[test]
        fn dual_blocks_in_unit_ball((p, u, _) in instance(), mu in 1e-3f64..2.0) {
            let op = DifferenceOperator::new(p, None).unwrap();
            let state = SmoothedPenaltyState::new(&op.apply(&u), op.block_len(), mu);
            for block in state.alpha_star.chunks(op.block_len()) {
                prop_assert!(crate::linalg::norm2(block) <= 1.0 + 1e-12);
            }
        }

        #[test]
        fn prox_is_nonexpansive((_, u, v) in instance(), t in 0.0f64..2.0) {
            let d: Vec<f64> = prox_l1(&u, t).iter().zip(prox_l1(&v, t)).map(|(a, b)| a - b).collect();
            let e: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
            prop_assert!(crate::linalg::norm2(&d) <= crate::linalg::norm2(&e) + 1e-12);
        }

        #[test]
        fn gap_nonnegative((p, u, _) in instance(), l1 in 0.0f64..1.0, l2 in 0.0f64..1.0) {
            let rows: Vec<Vec<f64>> = (0..p + 3)
                .map(|r| (0..p).map(|c| libm::sin((r * 7 + c * 3) as f64 + u[0])).collect())
                .collect();
            let x = DataMatrix::from_rows(&rows).unwrap();
            let hp = Hyperparameters::new(l1, l2).unwrap();
            let beta = devectorize(p, u).unwrap();
            prop_assert!(duality_gap(&beta, &x, &hp, 0.01).unwrap() >= 0.0);
            prop_assert!(duality_gap_unsmoothed(&beta, &x, &hp).unwrap() >= 0.0);
        }
    }
}

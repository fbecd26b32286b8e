//! Small dense helpers on slices, plus the few factorizations the estimators need.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four independent accumulators let the compiler vectorize
    let mut acc = [0.0f64; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * y[k];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

#[inline]
pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

#[inline]
pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| f64::max(m, x.abs()))
}

/// `XᵀX` stored row-major (`p × p`).
pub fn gram(x: &DMatrix<f64>) -> Vec<f64> {
    let p = x.ncols();
    let mut g = vec![0.0; p * p];
    for a in 0..p {
        let ca = x.column(a);
        for b in a..p {
            let v = ca.dot(&x.column(b));
            g[a * p + b] = v;
            g[b * p + a] = v;
        }
    }
    g
}

/// Result of a power iteration on a symmetric positive semidefinite operator.
#[derive(Debug, Clone, Copy)]
pub struct PowerEstimate {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration.
///
/// The start vector is deterministic so repeated calls agree bit for bit.
pub fn power_iteration(
    dim: usize,
    tol: f64,
    max_iter: usize,
    mut apply: impl FnMut(&[f64], &mut [f64]),
) -> PowerEstimate {
    if dim == 0 {
        return PowerEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
        };
    }
    // non-constant start so we are not orthogonal to structured eigenvectors
    let mut v: Vec<f64> = (0..dim).map(|k| 1.0 + 0.01 * ((k % 7) as f64)).collect();
    let n0 = norm2(&v);
    v.iter_mut().for_each(|x| *x /= n0);
    let mut w = vec![0.0; dim];
    let mut lambda = 0.0;
    for it in 1..=max_iter {
        apply(&v, &mut w);
        let next = dot(&v, &w);
        let nw = norm2(&w);
        if nw == 0.0 {
            return PowerEstimate {
                value: 0.0,
                converged: true,
                iterations: it,
            };
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        if it > 1 && (next - lambda).abs() <= tol * next.abs() {
            return PowerEstimate {
                value: f64::max(next, nw),
                converged: true,
                iterations: it,
            };
        }
        lambda = next;
    }
    PowerEstimate {
        value: lambda,
        converged: false,
        iterations: max_iter,
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m).first().copied().unwrap_or(0.0)
}

/// Minimum-norm least-squares solution of `a x = b` through the SVD pseudo-inverse.
pub fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let cutoff = smax * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON;
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v_t requested");
    let mut x = DVector::zeros(a.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > cutoff {
            let coef = u.column(k).dot(b) / s;
            x.axpy(coef, &vt.row(k).transpose(), 1.0);
        }
    }
    x
}

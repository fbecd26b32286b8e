//! Reference implementations used as oracles. They work on raw arrays and
//! share no code with the library beyond the input types.

#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::DMatrix;

/// Cyclic coordinate descent for `½‖y − Zb‖² + λ‖b‖₁`, residual-based.
pub fn lasso_cd(z: &DMatrix<f64>, y: &[f64], lambda: f64, sweeps: usize) -> Vec<f64> {
    let (n, q) = z.shape();
    let mut b = vec![0.0; q];
    let mut r: Vec<f64> = y.to_vec();
    let norms: Vec<f64> = (0..q).map(|k| (0..n).map(|t| z[(t, k)] * z[(t, k)]).sum()).collect();
    for _ in 0..sweeps {
        let mut change: f64 = 0.0;
        for k in 0..q {
            if norms[k] == 0.0 {
                continue;
            }
            let rho: f64 = (0..n).map(|t| z[(t, k)] * r[t]).sum::<f64>() + norms[k] * b[k];
            let new = if rho > lambda {
                (rho - lambda) / norms[k]
            } else if rho < -lambda {
                (rho + lambda) / norms[k]
            } else {
                0.0
            };
            let d = new - b[k];
            if d != 0.0 {
                for t in 0..n {
                    r[t] -= z[(t, k)] * d;
                }
                b[k] = new;
                change = change.max(d.abs());
            }
        }
        if change < 1e-15 {
            break;
        }
    }
    b
}

/// Design without column `i`, and column `i`.
pub fn split_column(x: &DMatrix<f64>, i: usize) -> (DMatrix<f64>, Vec<f64>) {
    let (n, p) = x.shape();
    let mut z = DMatrix::zeros(n, p - 1);
    let mut c = 0;
    for k in 0..p {
        if k == i {
            continue;
        }
        z.set_column(c, &x.column(k));
        c += 1;
    }
    (z, x.column(i).iter().copied().collect())
}

/// Coefficient of variable `k` in the regression of variable `i`, with rows
/// stored as `p × p` and an unused diagonal.
pub fn full_rows(p: usize, flat: &[f64]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; p]; p];
    for i in 0..p {
        let mut s = 0;
        for k in 0..p {
            if k != i {
                out[i][k] = flat[i * (p - 1) + s];
                s += 1;
            }
        }
    }
    out
}

/// Criterion evaluated straight from its definition on full `p × p` rows.
pub fn objective_by_definition(x: &DMatrix<f64>, rows: &[Vec<f64>], l1: f64, l2: f64) -> f64 {
    let (n, p) = x.shape();
    let mut total = 0.0;
    for i in 0..p {
        for t in 0..n {
            let mut fit = 0.0;
            for k in 0..p {
                if k != i {
                    fit += x[(t, k)] * rows[i][k];
                }
            }
            total += 0.5 * (x[(t, i)] - fit).powi(2);
        }
        for k in 0..p {
            if k != i {
                total += l1 * rows[i][k].abs();
            }
        }
    }
    for i in 0..p {
        for j in i + 1..p {
            // swap the roles of i and j in row j, then compare off-diagonals of row i
            let mut sq = 0.0;
            for k in 0..p {
                if k == i {
                    continue;
                }
                let other = if k == j { rows[j][i] } else { rows[j][k] };
                sq += (rows[i][k] - other).powi(2);
            }
            total += l2 * sq.sqrt();
        }
    }
    total
}

/// Pair-counting adjusted Rand index (Hubert–Arabie form).
pub fn ari_pairs(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut n11, mut n10, mut n01, mut n00) = (0f64, 0f64, 0f64, 0f64);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => n11 += 1.0,
                (true, false) => n10 += 1.0,
                (false, true) => n01 += 1.0,
                (false, false) => n00 += 1.0,
            }
        }
    }
    let den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if den == 0.0 {
        return if n10 == 0.0 && n01 == 0.0 { 1.0 } else { 0.0 };
    }
    2.0 * (n00 * n11 - n01 * n10) / den
}

/// Every set partition of `{0..p}` as restricted growth strings.
pub fn all_partitions(p: usize) -> Vec<Vec<usize>> {
    fn grow(cur: &mut Vec<usize>, max: usize, p: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == p {
            out.push(cur.clone());
            return;
        }
        for v in 0..=max + 1 {
            cur.push(v);
            grow(cur, max.max(v), p, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if p == 0 {
        return out;
    }
    let mut cur = vec![0];
    grow(&mut cur, 0, p, &mut out);
    out
}

/// Unordered pairs of `p` nodes in lexicographic order.
pub fn pairs(p: usize) -> Vec<(usize, usize)> {
    (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j))).collect()
}

/// Confusion counts of two edge bitmasks over `m` pairs: `(tp, fp, tn, fn)`.
pub fn confusion_masks(est: u32, truth: u32, m: usize) -> (usize, usize, usize, usize) {
    let all = if m == 32 { u32::MAX } else { (1u32 << m) - 1 };
    (
        (est & truth).count_ones() as usize,
        (est & !truth & all).count_ones() as usize,
        (!est & !truth & all).count_ones() as usize,
        (!est & truth & all).count_ones() as usize,
    )
}

/// Deterministic pseudo-random numbers in `[-1, 1)` (xorshift), independent of the library RNG.
pub struct Xorshift(pub u64);

impl Xorshift {
    pub fn next_f64(&mut self) -> f64 {
        self.0 ^= self.0 << 13;
        self.0 ^= self.0 >> 7;
        self.0 ^= self.0 << 17;
        ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
    }

    pub fn matrix(&mut self, n: usize, p: usize) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| self.next_f64())
    }
}

/// Central finite-difference gradient.
pub fn finite_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for k in 0..x.len() {
        let orig = xp[k];
        xp[k] = orig + h;
        let fp = f(&xp);
        xp[k] = orig - h;
        let fm = f(&xp);
        xp[k] = orig;
        g[k] = (fp - fm) / (2.0 * h);
    }
    g
}

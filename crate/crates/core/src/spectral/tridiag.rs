//! Symmetric tridiagonal eigensolver: Sturm-sequence bisection for the
//! eigenvalues, inverse iteration with cluster reorthogonalization for the
//! eigenvectors.

use crate::error::{Error, Result};

const MAX_BISECTIONS: usize = 256;
const MAX_INVERSE_ITERATIONS: usize = 12;
/// Eigenvalues closer than this fraction of `‖T‖` share a cluster and their
/// vectors are mutually reorthogonalized.
const CLUSTER_GAP: f64 = 1e-3;

/// Symmetric tridiagonal matrix with diagonal `diag` and off-diagonal `off`
/// (`off.len() == diag.len() - 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl TridiagonalMatrix {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::InvalidParameter {
                name: "off",
                reason: format!(
                    "expected {} off-diagonal entries, got {}",
                    diag.len().saturating_sub(1),
                    off.len()
                ),
            });
        }
        if diag.iter().chain(off.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tridiagonal matrix"));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn off_diag(&self) -> &[f64] {
        &self.off
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.off[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// Infinity norm (maximum absolute row sum).
    pub fn norm(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.off[i - 1].abs();
                }
                if i + 1 < n {
                    s += self.off[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.off[i - 1].abs();
            }
            if i + 1 < n {
                r += self.off[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        let pad = f64::EPSILON * self.norm().max(1.0) * n as f64;
        (lo - pad, hi + pad)
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE * self.norm().max(1.0);
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0.. {
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
            if i + 1 == self.len() {
                break;
            }
            q = self.diag[i + 1] - x - self.off[i] * self.off[i] / q;
        }
        count
    }

    /// The `k`-th smallest eigenvalue (0-based).
    fn kth_eigenvalue(&self, k: usize, bounds: (f64, f64)) -> f64 {
        let (mut lo, mut hi) = bounds;
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvalues with indices in `range`, ascending.
    pub fn eigenvalues(&self, range: std::ops::Range<usize>) -> Vec<f64> {
        let bounds = self.gershgorin();
        range.map(|k| self.kth_eigenvalue(k, bounds)).collect()
    }

    /// Orthonormal (Euclidean) eigenvectors for the ascending eigenvalues
    /// `values`.
    pub fn eigenvectors(&self, values: &[f64]) -> Result<Vec<Vec<f64>>> {
        let n = self.len();
        let norm = self.norm().max(f64::MIN_POSITIVE);
        let target = 1e-12 * norm * (n as f64).sqrt();
        let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
        let mut cluster_start = 0;
        let mut prev_shift = f64::NEG_INFINITY;

        for (j, &lambda) in values.iter().enumerate() {
            if j > 0 && lambda - values[j - 1] > CLUSTER_GAP * norm {
                cluster_start = j;
            }
            // Nudge coincident shifts apart so each solve sees a distinct
            // nearly singular system.
            let mut shift = lambda;
            let sep = 10.0 * f64::EPSILON * norm;
            if j > cluster_start && shift - prev_shift < sep {
                shift = prev_shift + sep;
            }
            prev_shift = shift;

            let lu = ShiftedLu::factor(self, shift);
            let mut v = start_vector(n, j);
            let mut converged_at = None;
            for it in 0..MAX_INVERSE_ITERATIONS {
                lu.solve(&mut v);
                for prev in &vectors[cluster_start..j] {
                    let d = dot(prev, &v);
                    v.iter_mut().zip(prev).for_each(|(a, b)| *a -= d * b);
                }
                let len = dot(&v, &v).sqrt();
                if !(len.is_finite() && len > 0.0) {
                    v = start_vector(n, j + it + 1);
                    continue;
                }
                v.iter_mut().for_each(|a| *a /= len);
                let tv = self.matvec(&v);
                let res = tv
                    .iter()
                    .zip(&v)
                    .map(|(a, b)| (a - lambda * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                if res <= target {
                    match converged_at {
                        // One extra sweep after convergence cleans up the
                        // cluster components.
                        Some(_) => break,
                        None => converged_at = Some(it),
                    }
                }
            }
            if converged_at.is_none() {
                return Err(Error::EigenConvergence {
                    index: j,
                    iterations: MAX_INVERSE_ITERATIONS,
                });
            }
            fix_sign(&mut v);
            vectors.push(v);
        }
        Ok(vectors)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deterministic, dense starting vector (golden-ratio sequence).
fn start_vector(n: usize, seed: usize) -> Vec<f64> {
    const PHI: f64 = 0.618_033_988_749_894_9;
    let offset = (seed as f64 * 0.754_877_666_246_692_8).fract();
    let mut v: Vec<f64> = (0..n)
        .map(|i| ((i as f64 + 1.0) * PHI + offset).fract() - 0.5)
        .collect();
    let len = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|a| *a /= len);
    v
}

/// Largest-magnitude component positive.
pub(crate) fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &a in v.iter() {
        if a.abs() > best.abs() * (1.0 + 1e-9) {
            best = a;
            sign = a.signum();
        }
    }
    if sign < 0.0 {
        v.iter_mut().for_each(|a| *a = -*a);
    }
}

/// LU factorization of `T − σI` with partial pivoting; `U` has two
/// superdiagonals.
struct ShiftedLu {
    u0: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    mult: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(t: &TridiagonalMatrix, sigma: f64) -> Self {
        let n = t.len();
        let tiny = f64::EPSILON * t.norm().max(f64::MIN_POSITIVE);
        let mut u0 = vec![0.0; n];
        let mut u1 = vec![0.0; n];
        let mut u2 = vec![0.0; n];
        let mut mult = vec![0.0; n];
        let mut swapped = vec![false; n];

        // Current pivot row: (a, b, c) at columns (i, i+1, i+2).
        let mut a = t.diag[0] - sigma;
        let mut b = if n > 1 { t.off[0] } else { 0.0 };
        for i in 0..n {
            if i + 1 == n {
                u0[i] = if a.abs() < tiny { tiny } else { a };
                break;
            }
            let sub = t.off[i];
            let nd = t.diag[i + 1] - sigma;
            let nsup = if i + 2 < n { t.off[i + 1] } else { 0.0 };
            if sub.abs() > a.abs() {
                // Swap rows i and i+1.
                swapped[i] = true;
                u0[i] = sub;
                u1[i] = nd;
                u2[i] = nsup;
                let m = a / sub;
                mult[i] = m;
                a = b - m * nd;
                b = -m * nsup;
            } else {
                let piv = if a.abs() < tiny { tiny } else { a };
                u0[i] = piv;
                u1[i] = b;
                u2[i] = 0.0;
                let m = sub / piv;
                mult[i] = m;
                a = nd - m * b;
                b = nsup;
            }
        }
        Self {
            u0,
            u1,
            u2,
            mult,
            swapped,
        }
    }

    fn solve(&self, x: &mut [f64]) {
        let n = x.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                x.swap(i, i + 1);
            }
            x[i + 1] -= self.mult[i] * x[i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            if i + 1 < n {
                s -= self.u1[i] * x[i + 1];
            }
            if i + 2 < n {
                s -= self.u2[i] * x[i + 2];
            }
            x[i] = s / self.u0[i];
        }
        // Guard against overflow from a nearly exact shift.
        let big = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if big > 1e150 || !big.is_finite() {
            let s = if big.is_finite() { 1.0 / big } else { 0.0 };
            x.iter_mut().for_each(|v| *v = if v.is_finite() { *v * s } else { 1.0 });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn laplacian(n: usize) -> TridiagonalMatrix {
        TridiagonalMatrix::new(vec![2.0; n], vec![-1.0; n - 1]).unwrap()
    }

    #[test]
    fn laplacian_eigenvalues_closed_form() {
        let n = 100;
        let t = laplacian(n);
        let ev = t.eigenvalues(0..n);
        for (k, e) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * (PI * (k + 1) as f64 / (n + 1) as f64).cos();
            assert!((e - exact).abs() < 1e-13, "{k}: {e} vs {exact}");
        }
    }

    #[test]
    fn vectors_orthonormal_and_accurate() {
        let n = 200;
        let d: Vec<f64> = (0..n).map(|i| 2.0 + 0.01 * (i as f64).sin()).collect();
        let t = TridiagonalMatrix::new(d, vec![-1.0; n - 1]).unwrap();
        let ev = t.eigenvalues(0..n);
        let vs = t.eigenvectors(&ev).unwrap();
        for (i, a) in vs.iter().enumerate() {
            let r: f64 = t
                .matvec(a)
                .iter()
                .zip(a)
                .map(|(x, y)| (x - ev[i] * y).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(r < 1e-10 * t.norm());
            for (j, b) in vs.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - expect).abs() < 1e-10, "({i},{j})");
            }
        }
    }

    #[test]
    fn split_matrix_with_repeated_eigenvalues() {
        // Two identical decoupled blocks: every eigenvalue is doubled.
        let mut off = vec![-1.0; 19];
        off[9] = 0.0;
        let t = TridiagonalMatrix::new(vec![2.0; 20], off).unwrap();
        let ev = t.eigenvalues(0..20);
        let vs = t.eigenvectors(&ev).unwrap();
        for pair in ev.chunks(2) {
            assert!((pair[0] - pair[1]).abs() < 1e-12);
        }
        for (i, a) in vs.iter().enumerate() {
            for (j, b) in vs.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot(a, b) - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn count_below_matches_eigenvalues() {
        let t = laplacian(50);
        let ev = t.eigenvalues(0..50);
        assert_eq!(t.count_below(ev[10] + 1e-9), 11);
        assert_eq!(t.count_below(-1.0), 0);
        assert_eq!(t.count_below(5.0), 50);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(TridiagonalMatrix::new(vec![1.0, 2.0], vec![]).is_err());
        assert!(TridiagonalMatrix::new(vec![1.0, f64::NAN], vec![0.0]).is_err());
    }
}

//! Dense square real matrices with symmetric eigendecomposition and Cholesky.

use alloc::vec;
use alloc::vec::Vec;

#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

/// Dense square matrix of `f64`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct RMat {
    n: usize,
    data: Vec<f64>,
}

impl RMat {
    /// Zero matrix of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from a row-major closure.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry (i, j).
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Set entry (i, j).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    /// Add `v` to entry (i, j).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    /// Raw row-major slice.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &RMat, c: f64) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += c * b;
        }
    }

    /// `c * self`, elementwise.
    pub fn scaled(&self, c: f64) -> RMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= c;
        }
        out
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &RMat) -> RMat {
        debug_assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = RMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self.get(i, k);
                if aik == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += aik * other.data[k * n + j];
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(self.n, x.len());
        let n = self.n;
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.get(i, j) * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Trace.
    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Frobenius inner product `tr(self * other)` for symmetric operands.
    pub fn sym_inner(&self, other: &RMat) -> f64 {
        debug_assert_eq!(self.n, other.n);
        self.data.iter().zip(other.data.iter()).map(|(a, b)| a * b).sum()
    }

    /// Frobenius norm.
    pub fn frob(&self) -> f64 {
        self.data.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// Quadratic form `x' * self * x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(self.n, x.len());
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += x[i] * self.get(i, j) * x[j];
            }
        }
        acc
    }

    /// Replace by `(self + self') / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.n;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
    }

    /// Largest absolute asymmetry `max |a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Eigendecomposition of a symmetric matrix by cyclic Jacobi sweeps.
    ///
    /// Returns eigenvalues in ascending order and the matrix whose columns
    /// are the matching orthonormal eigenvectors. The input is assumed
    /// symmetric; only the symmetric part participates.
    pub fn sym_eigen(&self) -> (Vec<f64>, RMat) {
        let n = self.n;
        let mut a = self.clone();
        a.symmetrize();
        let mut v = RMat::identity(n);
        let scale = a.frob().max(f64::MIN_POSITIVE);

        for _sweep in 0..60 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a.get(p, q).powi(2);
                }
            }
            if (2.0 * off).sqrt() <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    if apq.abs() <= 1e-300 {
                        continue;
                    }
                    let (c, s) = jacobi_cs(a.get(p, p), a.get(q, q), apq);
                    rotate_cols(&mut a, p, q, c, s);
                    rotate_rows(&mut a, p, q, c, s);
                    a.set(p, q, 0.0);
                    a.set(q, p, 0.0);
                    rotate_cols(&mut v, p, q, c, s);
                }
            }
        }

        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| a.get(i, i).partial_cmp(&a.get(j, j)).unwrap());
        let vals: Vec<f64> = idx.iter().map(|&i| a.get(i, i)).collect();
        let vecs = RMat::from_fn(n, |r, c| v.get(r, idx[c]));
        (vals, vecs)
    }

    /// Smallest eigenvalue of the symmetric part.
    pub fn min_eigenvalue(&self) -> f64 {
        self.sym_eigen().0[0]
    }

    /// Cholesky factorization `self = L * L'`; `None` if not positive
    /// definite.
    pub fn cholesky(&self) -> Option<RChol> {
        let n = self.n;
        let mut l = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut acc = self.get(i, j);
                for k in 0..j {
                    acc -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if acc <= 0.0 || !acc.is_finite() {
                        return None;
                    }
                    l[i * n + i] = acc.sqrt();
                } else {
                    l[i * n + j] = acc / l[j * n + j];
                }
            }
        }
        Some(RChol { n, l })
    }

    /// `f(self)` for a symmetric matrix via eigendecomposition:
    /// `V * diag(f(lambda)) * V'`.
    pub fn sym_map(&self, f: impl Fn(f64) -> f64) -> RMat {
        let (vals, vecs) = self.sym_eigen();
        let n = self.n;
        let mut out = RMat::zeros(n);
        for k in 0..n {
            let fv = f(vals[k]);
            if fv == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = vecs.get(i, k) * fv;
                for j in 0..n {
                    out.data[i * n + j] += vik * vecs.get(j, k);
                }
            }
        }
        out
    }
}

/// Lower-triangular Cholesky factor.
#[derive(Clone, Debug)]
pub struct RChol {
    n: usize,
    l: Vec<f64>,
}

impl RChol {
    /// Solve `L * L' * x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut acc = b[i];
            for k in 0..i {
                acc -= self.l[i * n + k] * b[k];
            }
            b[i] = acc / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for k in (i + 1)..n {
                acc -= self.l[k * n + i] * b[k];
            }
            b[i] = acc / self.l[i * n + i];
        }
    }

    /// `L^{-1} * A * L^{-T}` for symmetric `A`; used for step-length
    /// computations `X + t*D >= 0  <=>  I + t * L^{-1} D L^{-T} >= 0`.
    pub fn congruence_inv(&self, a: &RMat) -> RMat {
        let n = self.n;
        debug_assert_eq!(a.n(), n);
        // Y = L^{-1} A: forward-substitute every column.
        let mut y = a.clone();
        for j in 0..n {
            for i in 0..n {
                let mut acc = y.get(i, j);
                for k in 0..i {
                    acc -= self.l[i * n + k] * y.get(k, j);
                }
                y.set(i, j, acc / self.l[i * n + i]);
            }
        }
        // S = Y L^{-T}: forward-substitute every row.
        let mut s = y;
        for i in 0..n {
            for j in 0..n {
                let mut acc = s.get(i, j);
                for k in 0..j {
                    acc -= self.l[j * n + k] * s.get(i, k);
                }
                s.set(i, j, acc / self.l[j * n + j]);
            }
        }
        s
    }
}

/// Rotation parameters (c, s) zeroing the (p, q) entry.
fn jacobi_cs(app: f64, aqq: f64, apq: f64) -> (f64, f64) {
    let theta = (aqq - app) / (2.0 * apq);
    let t = if theta == 0.0 {
        1.0
    } else {
        let sign = if theta > 0.0 { 1.0 } else { -1.0 };
        sign / (theta.abs() + (1.0 + theta * theta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, t * c)
}

fn rotate_cols(a: &mut RMat, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..a.n() {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, c * akp - s * akq);
        a.set(k, q, s * akp + c * akq);
    }
}

fn rotate_rows(a: &mut RMat, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..a.n() {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, c * apk - s * aqk);
        a.set(q, k, s * apk + c * aqk);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reconstruct(vals: &[f64], vecs: &RMat) -> RMat {
        let n = vecs.n();
        RMat::from_fn(n, |i, j| {
            (0..n).map(|k| vecs.get(i, k) * vals[k] * vecs.get(j, k)).sum()
        })
    }

    #[test]
    fn eigen_recovers_known_spectrum() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = RMat::from_fn(2, |i, j| if i == j { 2.0 } else { 1.0 });
        let (vals, vecs) = a.sym_eigen();
        assert_abs_diff_eq!(vals[0], 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(vals[1], 3.0, epsilon = 1e-13);
        let r = reconstruct(&vals, &vecs);
        assert!(r.asymmetry() < 1e-13);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(r.get(i, j), a.get(i, j), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn eigen_orthonormal_and_reconstructs_random() {
        // Deterministic pseudo-random symmetric matrix.
        let n = 9;
        let mut state = 0x243f6a8885a308d3u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let mut a = RMat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = next();
                a.set(i, j, v);
                a.set(j, i, v);
            }
        }
        let (vals, vecs) = a.sym_eigen();
        for k in 1..n {
            assert!(vals[k] >= vals[k - 1]);
        }
        // V' V = I
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| vecs.get(k, i) * vecs.get(k, j)).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(dot, want, epsilon = 1e-12);
            }
        }
        let r = reconstruct(&vals, &vecs);
        for i in 0..n {
            for j in 0..n {
                assert_abs_diff_eq!(r.get(i, j), a.get(i, j), epsilon = 1e-11);
            }
        }
    }

    #[test]
    fn cholesky_round_trip_and_solve() {
        let mut a = RMat::from_fn(4, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()));
        for i in 0..4 {
            a.add(i, i, 1.0);
        }
        let ch = a.cholesky().expect("positive definite");
        let mut x = vec![1.0, -2.0, 0.5, 3.0];
        let b = a.matvec(&x);
        let mut sol = b.clone();
        ch.solve_in_place(&mut sol);
        for i in 0..4 {
            assert_abs_diff_eq!(sol[i], x[i], epsilon = 1e-12);
        }
        // Indefinite input is rejected.
        x[0] = 0.0; // silence unused warning path
        let bad = RMat::from_fn(2, |i, j| if i == j { -1.0 } else { 0.0 });
        assert!(bad.cholesky().is_none());
    }

    #[test]
    fn congruence_inv_matches_direct() {
        let a = RMat::from_fn(3, |i, j| if i == j { 2.0 + i as f64 } else { 0.3 });
        let d = RMat::from_fn(3, |i, j| (i + 2 * j) as f64 * 0.1 - 0.2);
        let mut dsym = d;
        dsym.symmetrize();
        let ch = a.cholesky().unwrap();
        let s = ch.congruence_inv(&dsym);
        // Check L * S * L' == D.
        let n = 3;
        let l = RMat::from_fn(n, |i, j| if j <= i { ch.l[i * n + j] } else { 0.0 });
        let lt = RMat::from_fn(n, |i, j| l.get(j, i));
        let back = l.matmul(&s).matmul(&lt);
        for i in 0..n {
            for j in 0..n {
                assert_abs_diff_eq!(back.get(i, j), dsym.get(i, j), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn sym_map_square_root() {
        let a = RMat::from_fn(2, |i, j| if i == j { 4.0 } else { 0.0 });
        let r = a.sym_map(|x| x.sqrt());
        assert_abs_diff_eq!(r.get(0, 0), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(r.get(1, 1), 2.0, epsilon = 1e-13);
    }
}

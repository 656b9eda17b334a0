//! Dense square complex matrices with Hermitian eigendecomposition.

use alloc::vec;
use alloc::vec::Vec;



use super::real::RMat;
use super::Cplx;

#[cfg_attr(feature = "std", allow(unused_imports))]
use num_traits::Float;

/// Hermitian inner product `sum conj(a_i) * b_i`.
pub fn cdot(a: &[Cplx], b: &[Cplx]) -> Cplx {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Squared Euclidean norm of a complex vector.
pub fn cnorm_sqr(a: &[Cplx]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<Cplx>,
}

impl CMat {
    /// Zero matrix of dimension `n`.
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Cplx::new(0.0, 0.0); n * n] }
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Cplx::new(1.0, 0.0));
        }
        m
    }

    /// Build from a row-major closure.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Cplx) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Rank-one outer product `h * h^H`.
    pub fn outer(h: &[Cplx]) -> Self {
        let n = h.len();
        Self::from_fn(n, |i, j| h[i] * h[j].conj())
    }

    /// Dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry (i, j).
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Cplx {
        self.data[i * self.n + j]
    }

    /// Set entry (i, j).
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Cplx) {
        self.data[i * self.n + j] = v;
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &CMat, c: f64) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += b * c;
        }
    }

    /// `c * self`, elementwise.
    pub fn scaled(&self, c: f64) -> CMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= c;
        }
        out
    }

    /// Real trace. The imaginary part is discarded; Hermitian inputs have
    /// none.
    pub fn trace_re(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).re).sum()
    }

    /// `tr(self * other)` for Hermitian operands; the result is real.
    pub fn herm_inner(&self, other: &CMat) -> f64 {
        debug_assert_eq!(self.n, other.n);
        // tr(AB) = sum_ij A_ij B_ji = sum_ij A_ij conj(B_ij) for Hermitian B.
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a * b.conj()).re)
            .sum()
    }

    /// Quadratic form `x^H * self * x`, real part.
    pub fn quad_form_re(&self, x: &[Cplx]) -> f64 {
        debug_assert_eq!(self.n, x.len());
        let mut acc = Cplx::new(0.0, 0.0);
        for i in 0..self.n {
            let mut row = Cplx::new(0.0, 0.0);
            for j in 0..self.n {
                row += self.get(i, j) * x[j];
            }
            acc += x[i].conj() * row;
        }
        acc.re
    }

    /// Matrix-vector product.
    pub fn matvec(&self, x: &[Cplx]) -> Vec<Cplx> {
        debug_assert_eq!(self.n, x.len());
        let mut out = vec![Cplx::new(0.0, 0.0); self.n];
        for i in 0..self.n {
            let mut acc = Cplx::new(0.0, 0.0);
            for j in 0..self.n {
                acc += self.get(i, j) * x[j];
            }
            out[i] = acc;
        }
        out
    }

    /// Frobenius norm.
    pub fn frob(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest deviation from Hermitian symmetry `max |a_ij - conj(a_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// True when every imaginary part is exactly zero.
    pub fn is_real(&self) -> bool {
        self.data.iter().all(|a| a.im == 0.0)
    }

    /// Real part as a real matrix.
    pub fn re(&self) -> RMat {
        RMat::from_fn(self.n, |i, j| self.get(i, j).re)
    }

    /// The real symmetric image `[[Re, -Im], [Im, Re]]` of a Hermitian
    /// matrix; dimension doubles.
    pub fn real_embedding(&self) -> RMat {
        let n = self.n;
        RMat::from_fn(2 * n, |i, j| {
            let a = self.get(i % n, j % n);
            match (i < n, j < n) {
                (true, true) | (false, false) => a.re,
                (true, false) => -a.im,
                (false, true) => a.im,
            }
        })
    }

    /// Inverse of [`CMat::real_embedding`] for arbitrary symmetric input:
    /// `X = (X11 + X22)/2 + i (X21 - X12)/2`. Hermitian (and PSD) whenever
    /// the input is symmetric (and PSD).
    pub fn from_real_embedding(e: &RMat) -> CMat {
        let n2 = e.n();
        debug_assert!(n2 % 2 == 0);
        let n = n2 / 2;
        CMat::from_fn(n, |i, j| {
            let re = 0.5 * (e.get(i, j) + e.get(n + i, n + j));
            let im = 0.5 * (e.get(n + i, j) - e.get(i, n + j));
            Cplx::new(re, im)
        })
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps with
    /// phase rotations.
    ///
    /// Returns real eigenvalues in ascending order and the unitary matrix of
    /// eigenvectors (columns). Exactly real input stays real: the phase step
    /// degenerates to a sign flip.
    pub fn herm_eigen(&self) -> (Vec<f64>, CMat) {
        let n = self.n;
        let mut a = self.clone();
        // Work on the Hermitian part only.
        for i in 0..n {
            for j in i..n {
                let v = (a.get(i, j) + a.get(j, i).conj()) * 0.5;
                a.set(i, j, v);
                a.set(j, i, v.conj());
            }
            let d = a.get(i, i);
            a.set(i, i, Cplx::new(d.re, 0.0));
        }
        let mut v = CMat::identity(n);
        let scale = a.frob().max(f64::MIN_POSITIVE);

        for _sweep in 0..60 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a.get(p, q).norm_sqr();
                }
            }
            if (2.0 * off).sqrt() <= 1e-15 * scale {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a.get(p, q);
                    let m = apq.norm();
                    if m <= 1e-300 {
                        continue;
                    }
                    // Phase-rotate row/column q so the pivot becomes real
                    // positive, then apply a real Jacobi rotation.
                    let u = apq / m;
                    phase_col(&mut a, q, u.conj());
                    phase_row(&mut a, q, u);
                    phase_col(&mut v, q, u.conj());

                    let (c, s) = jacobi_cs(a.get(p, p).re, a.get(q, q).re, m);
                    rotate_cols(&mut a, p, q, c, s);
                    rotate_rows(&mut a, p, q, c, s);
                    a.set(p, q, Cplx::new(0.0, 0.0));
                    a.set(q, p, Cplx::new(0.0, 0.0));
                    let dp = a.get(p, p);
                    let dq = a.get(q, q);
                    a.set(p, p, Cplx::new(dp.re, 0.0));
                    a.set(q, q, Cplx::new(dq.re, 0.0));
                    rotate_cols(&mut v, p, q, c, s);
                }
            }
        }

        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| a.get(i, i).re.partial_cmp(&a.get(j, j).re).unwrap());
        let vals: Vec<f64> = idx.iter().map(|&i| a.get(i, i).re).collect();
        let vecs = CMat::from_fn(n, |r, c| v.get(r, idx[c]));
        (vals, vecs)
    }

    /// Factor `F` with `F * F^H ~= self` for a Hermitian PSD matrix.
    ///
    /// Eigenvalues below `clip_rel * trace` are treated as exact zeros, so
    /// slightly indefinite numerical input factors cleanly. Columns of `F`
    /// are scaled eigenvectors; zero columns are kept to preserve shape.
    pub fn psd_factor(&self, clip_rel: f64) -> CMat {
        let (vals, vecs) = self.herm_eigen();
        let n = self.n;
        let cutoff = clip_rel * self.trace_re().max(0.0);
        CMat::from_fn(n, |i, j| {
            let lam = vals[j];
            if lam <= cutoff {
                Cplx::new(0.0, 0.0)
            } else {
                vecs.get(i, j) * lam.sqrt()
            }
        })
    }
}

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

fn phase_col(a: &mut CMat, q: usize, u: Cplx) {
    for k in 0..a.n() {
        let v = a.get(k, q) * u;
        a.set(k, q, v);
    }
}

fn phase_row(a: &mut CMat, q: usize, u: Cplx) {
    for k in 0..a.n() {
        let v = a.get(q, k) * u;
        a.set(q, k, v);
    }
}

fn rotate_cols(a: &mut CMat, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..a.n() {
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        a.set(k, p, akp * c - akq * s);
        a.set(k, q, akp * s + akq * c);
    }
}

fn rotate_rows(a: &mut CMat, p: usize, q: usize, c: f64, s: f64) {
    for k in 0..a.n() {
        let apk = a.get(p, k);
        let aqk = a.get(q, k);
        a.set(p, k, apk * c - aqk * s);
        a.set(q, k, apk * s + aqk * c);
    }
}

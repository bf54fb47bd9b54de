//! Minimal dense complex linear algebra over a generic real scalar.
//!
//! Everything here operates on small matrices (at most a few hundred rows),
//! so the routines are straightforward loop nests; the Cholesky core is shared
//! with the kernel hot path through [`cholesky_in_place`].

use thiserror::Error;

use crate::num::{real, Scalar, C};

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian positive definite (pivot {pivot} not positive)")]
    NotPositiveDefinite { pivot: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T: Scalar> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C<T>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re.is_zero() && a.im.is_zero() {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(i, j)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (d, s) in out.data.iter_mut().zip(&other.data) {
            *d += s;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (d, s) in out.data.iter_mut().zip(&other.data) {
            *d -= s;
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        let mut out = self.clone();
        for d in out.data.iter_mut() {
            *d = C::new(d.re * s, d.im * s);
        }
        out
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// max_ij |A_ij - conj(A_ji)|.
    pub fn hermiticity_residual(&self) -> T {
        assert_eq!(self.rows, self.cols);
        let mut worst = T::zero();
        for i in 0..self.rows {
            for j in 0..=i {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// ||A A^dag - I||_max.
    pub fn unitarity_residual(&self) -> T {
        self.mul(&self.adjoint())
            .max_abs_diff(&Self::identity(self.rows))
    }

    pub fn principal_submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// Lower-triangular Cholesky factor of a Hermitian positive definite matrix.
    pub fn cholesky(&self) -> Result<Self, LinalgError> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut buf = self.data.clone();
        cholesky_in_place(&mut buf, n)
            .map_err(|pivot| LinalgError::NotPositiveDefinite { pivot })?;
        for i in 0..n {
            for j in (i + 1)..n {
                buf[i * n + j] = C::new(T::zero(), T::zero());
            }
        }
        Ok(Self {
            rows: n,
            cols: n,
            data: buf,
        })
    }

    /// sqrt(det A) for Hermitian positive definite A, via the Cholesky diagonal.
    pub fn sqrt_det_hpd(&self) -> Result<T, LinalgError> {
        let l = self.cholesky()?;
        let mut acc = T::one();
        for j in 0..self.rows {
            acc = acc * l[(j, j)].re;
        }
        Ok(acc)
    }

    /// Inverse of a Hermitian positive definite matrix via Cholesky.
    pub fn inverse_hpd(&self) -> Result<Self, LinalgError> {
        let n = self.rows;
        let l = self.cholesky()?;
        // M = L^-1 by forward substitution on the triangle.
        let mut m = Self::zeros(n, n);
        for j in 0..n {
            m[(j, j)] = C::new(T::one() / l[(j, j)].re, T::zero());
            for i in (j + 1)..n {
                let mut s = C::new(T::zero(), T::zero());
                for k in j..i {
                    s += l[(i, k)] * m[(k, j)];
                }
                m[(i, j)] = -s / l[(i, i)].re;
            }
        }
        // A^-1 = M^dag M; fill the lower triangle and mirror.
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = C::new(T::zero(), T::zero());
                // row index k of M must cover max(i, j).. for nonzero entries
                for k in i..n {
                    s += m[(k, i)].conj() * m[(k, j)];
                }
                inv[(i, j)] = s;
                if i != j {
                    inv[(j, i)] = s.conj();
                }
            }
        }
        Ok(inv)
    }

    /// Householder QR of a square matrix: returns (Q, R) with A = Q R.
    pub fn qr_square(&self) -> (Self, Self) {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut r = self.clone();
        let mut q = Self::identity(n);
        let mut v = vec![C::new(T::zero(), T::zero()); n];
        for j in 0..n {
            // Householder vector for column j below the diagonal.
            let mut norm_sq = T::zero();
            for i in j..n {
                norm_sq = norm_sq + r[(i, j)].norm_sqr();
            }
            let norm = norm_sq.sqrt();
            if norm.is_zero() {
                continue;
            }
            let x0 = r[(j, j)];
            let phase = if x0.norm().is_zero() {
                C::new(T::one(), T::zero())
            } else {
                x0 / x0.norm()
            };
            for i in j..n {
                v[i] = r[(i, j)];
            }
            v[j] = x0 + phase * norm;
            let vnorm_sq: T = (j..n).map(|i| v[i].norm_sqr()).sum();
            if vnorm_sq.is_zero() {
                continue;
            }
            let tau = real::<T>(2.0) / vnorm_sq;
            // R <- H R
            for c in j..n {
                let mut w = C::new(T::zero(), T::zero());
                for i in j..n {
                    w += v[i].conj() * r[(i, c)];
                }
                let tw = C::new(w.re * tau, w.im * tau);
                for i in j..n {
                    let upd = v[i] * tw;
                    r[(i, c)] -= upd;
                }
            }
            // Q <- Q H
            for row in 0..n {
                let mut w = C::new(T::zero(), T::zero());
                for i in j..n {
                    w += q[(row, i)] * v[i];
                }
                let tw = C::new(w.re * tau, w.im * tau);
                for i in j..n {
                    let upd = tw * v[i].conj();
                    q[(row, i)] -= upd;
                }
            }
        }
        // Clean the explicit zeros below the diagonal of R.
        for i in 0..n {
            for j in 0..i {
                r[(i, j)] = C::new(T::zero(), T::zero());
            }
        }
        (q, r)
    }
}

impl<T: Scalar> std::ops::Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Scalar> std::ops::IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

/// In-place lower Cholesky factorization of a Hermitian positive definite
/// matrix stored row-major in `buf` (only the lower triangle is read).
///
/// On success the lower triangle of `buf` holds L with real positive diagonal.
/// Returns the failing pivot index when the matrix is not positive definite.
#[inline]
pub fn cholesky_in_place<T: Scalar>(buf: &mut [C<T>], n: usize) -> Result<(), usize> {
    debug_assert_eq!(buf.len(), n * n);
    for j in 0..n {
        let row_j_start = j * n;
        let mut d = buf[row_j_start + j].re;
        for p in 0..j {
            d = d - buf[row_j_start + p].norm_sqr();
        }
        if !(d > T::zero()) || !d.is_finite() {
            return Err(j);
        }
        let ljj = d.sqrt();
        buf[row_j_start + j] = C::new(ljj, T::zero());
        let inv = T::one() / ljj;
        for i in (j + 1)..n {
            let (lo, hi) = buf.split_at_mut(i * n);
            let row_j = &lo[row_j_start..row_j_start + j];
            let row_i = &hi[..j];
            let mut s_re = T::zero();
            let mut s_im = T::zero();
            for (a, b) in row_i.iter().zip(row_j) {
                // a * conj(b)
                s_re = s_re + a.re * b.re + a.im * b.im;
                s_im = s_im + a.im * b.re - a.re * b.im;
            }
            let aij = hi[j];
            hi[j] = C::new((aij.re - s_re) * inv, (aij.im - s_im) * inv);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::C;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn c(re: f64, im: f64) -> C<f64> {
        C::new(re, im)
    }

    fn random_hpd(n: usize, seed: u64) -> CMatrix<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let a = CMatrix::from_fn(n, n, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        a.mul(&a.adjoint()).add(&CMatrix::identity(n))
    }

    #[test]
    fn cholesky_reconstructs() {
        let a = random_hpd(7, 1);
        let l = a.cholesky().unwrap();
        let rec = l.mul(&l.adjoint());
        assert!(rec.max_abs_diff(&a) < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let mut a = CMatrix::<f64>::identity(3);
        a[(1, 1)] = c(-2.0, 0.0);
        assert!(matches!(
            a.cholesky(),
            Err(LinalgError::NotPositiveDefinite { pivot: 1 })
        ));
    }

    #[test]
    fn inverse_hpd_roundtrip() {
        let a = random_hpd(9, 2);
        let inv = a.inverse_hpd().unwrap();
        let prod = a.mul(&inv);
        assert!(prod.max_abs_diff(&CMatrix::identity(9)) < 1e-11);
        assert!(inv.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn qr_factors_and_q_is_unitary() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let a = CMatrix::from_fn(12, 12, |_, _| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let (q, r) = a.qr_square();
        assert!(q.unitarity_residual() < 1e-13);
        assert!(q.mul(&r).max_abs_diff(&a) < 1e-13);
        for i in 0..12 {
            for j in 0..i {
                assert_eq!(r[(i, j)], c(0.0, 0.0));
            }
        }
    }

    #[test]
    fn sqrt_det_matches_diagonal_case() {
        let mut a = CMatrix::<f64>::zeros(2, 2);
        a[(0, 0)] = c(0.5, 0.0);
        a[(1, 1)] = c(0.5, 0.0);
        assert!((a.sqrt_det_hpd().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn generic_over_f32() {
        let mut a = CMatrix::<f32>::identity(4);
        a[(0, 1)] = C::new(0.25, 0.125);
        a[(1, 0)] = C::new(0.25, -0.125);
        let l = a.cholesky().unwrap();
        let rec = l.mul(&l.adjoint());
        assert!(rec.max_abs_diff(&a) < 1e-6);
    }
}

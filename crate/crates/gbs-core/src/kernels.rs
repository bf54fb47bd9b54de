//! Exact matrix-function kernels: Torontonian, Hafnian, permanent.
//!
//! The Torontonian is the cost center of the whole artifact: its inclusion-
//! exclusion sum visits 2^k clicked-mode subsets and factorizes a Hermitian
//! submatrix for each, so runtime doubles per extra click. Accumulation uses
//! Neumaier compensation and every value is returned together with a
//! first-order rounding-error estimate, mirroring how untrusted values would
//! be rejected at scale.

use rayon::prelude::*;
use thiserror::Error;

use crate::linalg::{cholesky_in_place, CMatrix};
use crate::num::{gray, real, CompensatedSum, Scalar, C};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error(
        "{clicks} clicks exceeds the kernel limit {limit}: 2^{clicks} = {terms} subsets, \
         roughly {est_seconds:.1e} s on commodity hardware"
    )]
    TooManyClicks {
        clicks: usize,
        limit: usize,
        terms: u128,
        est_seconds: f64,
    },
    #[error("matrix of dimension {dim} exceeds the {what} limit {limit}")]
    TooLarge {
        what: &'static str,
        dim: usize,
        limit: usize,
    },
    #[error("kernel input is not Hermitian (residual {0:e})")]
    NotHermitian(f64),
    #[error("kernel input is not symmetric (residual {0:e})")]
    NotSymmetric(f64),
    #[error("matrix has {rows}x{cols} shape, expected square of even dimension")]
    BadShape { rows: usize, cols: usize },
    #[error(
        "principal submatrix {subset:?} of I - O is not positive definite: \
         invalid state or numerical breakdown"
    )]
    NotPositiveDefinite { subset: Vec<usize> },
}

/// Tunable kernel limits; the CLI `[kernels]` section maps onto this.
#[derive(Debug, Clone)]
pub struct KernelConfig {
    /// Refuse Torontonians above this click count (2^k growth).
    pub max_clicks: usize,
    /// Number of contiguous subset chunks summed independently and merged in
    /// fixed order. 0 selects a deterministic per-k default, so results are
    /// bitwise reproducible for any worker count.
    pub chunks: usize,
    /// Iterate subsets in Gray-code order (true) or plain binary order.
    pub gray_order: bool,
    /// Dimension cap for the matching-enumeration Hafnian.
    pub max_hafnian_dim: usize,
    /// Dimension cap for the Ryser permanent.
    pub max_permanent_dim: usize,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            max_clicks: 26,
            chunks: 0,
            gray_order: true,
            max_hafnian_dim: 16,
            max_permanent_dim: 20,
        }
    }
}

impl KernelConfig {
    fn effective_chunks(&self, k: usize) -> u64 {
        if self.chunks > 0 {
            (self.chunks as u64).min(1u64 << k)
        } else if k >= 14 {
            128
        } else {
            1
        }
    }
}

/// Crude single-core time estimate used in refusal diagnostics.
fn naive_cost_seconds(k: usize) -> f64 {
    let terms = (1u128 << k) as f64;
    let dim = k as f64; // typical subset has k/2 clicks -> dimension k
    terms * (dim * dim * dim * 8.0 / 3.0 + 200.0) / 3.0e9
}

/// Hermitian kernel input `O` for clicked-mode count `k`, with row/column
/// pairing `(i, i + k)`.
#[derive(Debug, Clone)]
pub struct KernelMatrix<T: Scalar> {
    k: usize,
    mat: CMatrix<T>,
}

impl<T: Scalar> KernelMatrix<T> {
    pub fn new(mat: CMatrix<T>) -> Result<Self, KernelError> {
        if mat.rows() != mat.cols() || mat.rows() % 2 != 0 {
            return Err(KernelError::BadShape {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        let tol = real::<T>(1e-10).max(T::epsilon() * real::<T>(100.0));
        let res = mat.hermiticity_residual();
        if res > tol {
            return Err(KernelError::NotHermitian(res.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self {
            k: mat.rows() / 2,
            mat,
        })
    }

    /// Empty kernel (k = 0); its Torontonian is 1.
    pub fn empty() -> Self {
        Self {
            k: 0,
            mat: CMatrix::zeros(0, 0),
        }
    }

    pub fn clicks(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    /// Explicitly verify that `I - O` is positive definite.
    pub fn validate(&self) -> Result<(), KernelError> {
        let r = identity_minus(&self.mat);
        r.cholesky()
            .map(|_| ())
            .map_err(|_| KernelError::NotPositiveDefinite {
                subset: (0..self.k).collect(),
            })
    }
}

fn identity_minus<T: Scalar>(o: &CMatrix<T>) -> CMatrix<T> {
    let n = o.rows();
    let mut r = o.scale(-T::one());
    for i in 0..n {
        r[(i, i)] += C::new(T::one(), T::zero());
    }
    r
}

/// Torontonian value together with its accumulated-error estimate.
#[derive(Debug, Clone, Copy)]
pub struct TorValue<T: Scalar> {
    pub value: T,
    /// First-order bound on rounding error from the per-subset Cholesky
    /// factorizations plus the compensated sum.
    pub error_estimate: T,
    pub terms: u64,
}

/// Inclusion-exclusion Torontonian:
/// `sum over Z subsets of [k] of (-1)^(k-|Z|) / sqrt det((I-O)_{Z u Z+k})`.
pub fn torontonian<T: Scalar>(o: &KernelMatrix<T>) -> Result<TorValue<T>, KernelError> {
    torontonian_with(o, &KernelConfig::default())
}

pub fn torontonian_with<T: Scalar>(
    o: &KernelMatrix<T>,
    cfg: &KernelConfig,
) -> Result<TorValue<T>, KernelError> {
    let k = o.k;
    if k > cfg.max_clicks {
        return Err(KernelError::TooManyClicks {
            clicks: k,
            limit: cfg.max_clicks,
            terms: 1u128 << k,
            est_seconds: naive_cost_seconds(k),
        });
    }
    if k == 0 {
        return Ok(TorValue {
            value: T::one(),
            error_estimate: T::epsilon(),
            terms: 1,
        });
    }
    let r = identity_minus(&o.mat);
    let total: u64 = 1u64 << k;
    let n_chunks = cfg.effective_chunks(k);
    let chunk_len = total / n_chunks + if total % n_chunks != 0 { 1 } else { 0 };

    let partials: Result<Vec<CompensatedSum<T>>, KernelError> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * chunk_len;
            let hi = ((c + 1) * chunk_len).min(total);
            subset_range_sum(&r, k, lo, hi, cfg.gray_order)
        })
        .collect();
    let partials = partials?;

    let mut acc = CompensatedSum::new();
    for p in &partials {
        acc.merge(p);
    }
    let dim = real::<T>(2.0 * k as f64);
    let error_estimate =
        T::epsilon() * acc.abs_sum() * (real::<T>(4.0) * dim + real::<T>(6.0));
    Ok(TorValue {
        value: acc.value(),
        error_estimate,
        terms: acc.count(),
    })
}

/// Sum the inclusion-exclusion terms for subset ranks `lo..hi`.
fn subset_range_sum<T: Scalar>(
    r: &CMatrix<T>,
    k: usize,
    lo: u64,
    hi: u64,
    gray_order: bool,
) -> Result<CompensatedSum<T>, KernelError> {
    let mut acc = CompensatedSum::new();
    let dim_max = 2 * k;
    let mut scratch = vec![C::new(T::zero(), T::zero()); dim_max * dim_max];
    let mut idx: Vec<usize> = Vec::with_capacity(dim_max);
    for rank in lo..hi {
        let z = if gray_order { gray(rank) } else { rank };
        idx.clear();
        let mut bits = z;
        while bits != 0 {
            idx.push(bits.trailing_zeros() as usize);
            bits &= bits - 1;
        }
        let s = idx.len();
        let n = 2 * s;
        // gather the lower triangle of (I-O) on Z u (Z + k)
        for p in 0..n {
            let gp = if p < s { idx[p] } else { idx[p - s] + k };
            let row = &mut scratch[p * n..p * n + p + 1];
            for (q, slot) in row.iter_mut().enumerate() {
                let gq = if q < s { idx[q] } else { idx[q - s] + k };
                *slot = r[(gp, gq)];
            }
        }
        if cholesky_in_place(&mut scratch[..n * n], n).is_err() {
            return Err(KernelError::NotPositiveDefinite { subset: idx.clone() });
        }
        let mut inv_sqrt_det = T::one();
        for j in 0..n {
            inv_sqrt_det = inv_sqrt_det / scratch[j * n + j].re;
        }
        let term = if (k - s) % 2 == 1 {
            -inv_sqrt_det
        } else {
            inv_sqrt_det
        };
        acc.add(term);
    }
    Ok(acc)
}

/// Determinant of a Hermitian positive definite matrix via Cholesky.
pub fn det_hpd<T: Scalar>(m: &CMatrix<T>) -> Result<T, KernelError> {
    if m.rows() != m.cols() {
        return Err(KernelError::BadShape {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let sqrt_det = m
        .sqrt_det_hpd()
        .map_err(|_| KernelError::NotPositiveDefinite { subset: vec![] })?;
    Ok(sqrt_det * sqrt_det)
}

/// Hafnian of a complex symmetric matrix by direct perfect-matching
/// enumeration: (dim - 1)!! products. Serves as the small-scale oracle for
/// photon-number-resolved probabilities.
pub fn hafnian<T: Scalar>(a: &CMatrix<T>) -> Result<C<T>, KernelError> {
    hafnian_with(a, &KernelConfig::default())
}

pub fn hafnian_with<T: Scalar>(a: &CMatrix<T>, cfg: &KernelConfig) -> Result<C<T>, KernelError> {
    let n = a.rows();
    if a.cols() != n {
        return Err(KernelError::BadShape {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    if n % 2 == 1 {
        log::warn!("hafnian of odd dimension {n} is 0 by convention (no perfect matchings)");
        return Ok(C::new(T::zero(), T::zero()));
    }
    if n > cfg.max_hafnian_dim {
        return Err(KernelError::TooLarge {
            what: "hafnian",
            dim: n,
            limit: cfg.max_hafnian_dim,
        });
    }
    let tol = real::<T>(1e-10).max(T::epsilon() * real::<T>(100.0));
    let mut res = T::zero();
    for i in 0..n {
        for j in 0..i {
            res = res.max((a[(i, j)] - a[(j, i)]).norm());
        }
    }
    if res > tol {
        return Err(KernelError::NotSymmetric(res.to_f64().unwrap_or(f64::NAN)));
    }
    if n == 0 {
        return Ok(C::new(T::one(), T::zero()));
    }
    Ok(matching_sum(a, 0))
}

/// Recursive matching enumeration: pair the first free index with every later
/// free index.
fn matching_sum<T: Scalar>(a: &CMatrix<T>, used: u32) -> C<T> {
    let n = a.rows();
    let mut first = n;
    for i in 0..n {
        if used & (1 << i) == 0 {
            first = i;
            break;
        }
    }
    if first == n {
        return C::new(T::one(), T::zero());
    }
    let used = used | (1 << first);
    let mut total = C::new(T::zero(), T::zero());
    for j in (first + 1)..n {
        if used & (1 << j) != 0 {
            continue;
        }
        let w = a[(first, j)];
        if w.re.is_zero() && w.im.is_zero() {
            continue;
        }
        total += w * matching_sum(a, used | (1 << j));
    }
    total
}

/// Permanent of a square complex matrix via Ryser's inclusion-exclusion with
/// Gray-code column updates and compensated accumulation.
pub fn permanent<T: Scalar>(m: &CMatrix<T>) -> Result<C<T>, KernelError> {
    permanent_with(m, &KernelConfig::default())
}

pub fn permanent_with<T: Scalar>(m: &CMatrix<T>, cfg: &KernelConfig) -> Result<C<T>, KernelError> {
    let n = m.rows();
    if m.cols() != n {
        return Err(KernelError::BadShape {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if n > cfg.max_permanent_dim {
        return Err(KernelError::TooLarge {
            what: "permanent",
            dim: n,
            limit: cfg.max_permanent_dim,
        });
    }
    if n == 0 {
        return Ok(C::new(T::one(), T::zero()));
    }
    let mut row_sums = vec![C::new(T::zero(), T::zero()); n];
    let mut acc_re = CompensatedSum::new();
    let mut acc_im = CompensatedSum::new();
    let mut prev: u64 = 0;
    for rank in 1..(1u64 << n) {
        let code = gray(rank);
        let toggled = (code ^ prev).trailing_zeros() as usize;
        let added = code & (1 << toggled) != 0;
        prev = code;
        for (i, rs) in row_sums.iter_mut().enumerate() {
            let a = m[(i, toggled)];
            if added {
                *rs += a;
            } else {
                *rs -= a;
            }
        }
        let mut prod = C::new(T::one(), T::zero());
        for rs in &row_sums {
            prod *= *rs;
        }
        let parity = code.count_ones() as usize;
        let sign_flip = (n - parity) % 2 == 1;
        if sign_flip {
            acc_re.add(-prod.re);
            acc_im.add(-prod.im);
        } else {
            acc_re.add(prod.re);
            acc_im.add(prod.im);
        }
    }
    Ok(C::new(acc_re.value(), acc_im.value()))
}

//! Scalar abstraction and compensated accumulation.

use std::fmt;
use std::iter::{Product, Sum};

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real scalar type for all covariance and kernel arithmetic: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Product
    + fmt::Debug
    + fmt::Display
    + fmt::LowerExp
    + Default
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + NumAssign
        + Sum
        + Product
        + fmt::Debug
        + fmt::Display
        + fmt::LowerExp
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Convert an `f64` constant into the working scalar.
#[inline]
pub fn real<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 converts to scalar")
}

/// Complex number over the working scalar.
pub type C<T> = num_complex::Complex<T>;

/// Neumaier (Kahan-Babuska) compensated summation.
///
/// Tracks the running compensation term together with the sum of absolute
/// values and the term count, so callers can turn the accumulated state into
/// a first-order rounding-error bound.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum<T: Scalar> {
    sum: T,
    comp: T,
    abs_sum: T,
    count: u64,
}

impl<T: Scalar> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
            abs_sum: T::zero(),
            count: 0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
        self.abs_sum = self.abs_sum + x.abs();
        self.count += 1;
    }

    /// Fold another accumulator into this one (deterministic chunk merge).
    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.comp = self.comp + other.comp;
        self.abs_sum = self.abs_sum + other.abs_sum;
        // `add` counted the merged sum as one term; replace with the true count.
        self.count = self.count - 1 + other.count;
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }

    pub fn abs_sum(&self) -> T {
        self.abs_sum
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// First-order bound on |naive sum - compensated sum|.
    ///
    /// A naive left-to-right sum of n terms carries error up to
    /// n * eps * sum|x|; the compensated result is accurate to ~2 eps * sum|x|.
    pub fn naive_error_bound(&self) -> T {
        let n = T::from_u64(self.count + 4).unwrap_or_else(T::max_value);
        n * T::epsilon() * self.abs_sum
    }
}

/// Gray-code member of the subset sequence: consecutive ranks differ by one bit.
#[inline]
pub fn gray(rank: u64) -> u64 {
    rank ^ (rank >> 1)
}

/// Exact binomial coefficient in `f64` (exact for the desk-scale ranges used).
pub fn binomial_f64(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

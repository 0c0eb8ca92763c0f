//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, panicking only if the target cannot represent finite values.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits in float")
    }

    /// Bit pattern of the value widened to `f64`, used as a memoization key.
    #[inline]
    fn key_bits(self) -> u64 {
        self.to_f64().unwrap_or(f64::NAN).to_bits()
    }

    /// Default threshold below which an eigenvalue counts as zero.
    fn default_eps_pd() -> Self;
}

impl Real for f64 {
    fn default_eps_pd() -> Self {
        1e-12
    }
}

impl Real for f32 {
    fn default_eps_pd() -> Self {
        1e-6
    }
}

/// Pairwise (tree) summation in a fixed order, so results do not depend on
/// thread scheduling.
pub fn pairwise_sum<T: Real>(values: &[T]) -> T {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        let mut acc = T::zero();
        for &v in values {
            acc += v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

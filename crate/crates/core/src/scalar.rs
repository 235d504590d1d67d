//! Scalar abstraction shared by the valuation and Markov-chain code.
//!
//! Everything that only needs field arithmetic (clause polynomials, matrix
//! products, Gaussian elimination) is written against [`Scalar`], so the same
//! code runs on `f32`, `f64` and exact rationals. Code that needs square roots
//! (the cubic maximizer, hill climbing) is bounded on [`num_traits::Float`]
//! instead.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, Signed};

/// A field element usable by the generic numeric routines.
pub trait Scalar: Clone + Debug + PartialOrd + Num + Signed + Send + Sync + 'static {
    /// The value `num / den`. `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Nearest `f64`, for reporting and tolerance checks.
    fn to_f64(&self) -> f64;

    /// True for types whose arithmetic is exact.
    const EXACT: bool;
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    const EXACT: bool = false;
}

impl Scalar for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }

    const EXACT: bool = false;
}

impl Scalar for Ratio<i64> {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(num, den)
    }

    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    const EXACT: bool = true;
}

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        Ratio::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        num_traits::ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    const EXACT: bool = true;
}

//! Scalar abstractions.
//!
//! The algebraic parts of the crate (moment transforms, Hankel assembly,
//! pivoting, the product determinant) only need field operations and an
//! ordering, so they are written against [`Field`] and run unchanged on
//! `f32`, `f64` and exact [`BigRational`]. Anything that takes a logarithm
//! or evaluates a special function needs [`Real`].

use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, Signed, ToPrimitive};

/// Ordered field arithmetic.
pub trait Field: Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + Send + Sync + 'static {
    /// Relative pivot threshold used by the strict positive-definiteness
    /// test. Zero for exact types.
    fn pivot_tolerance() -> Self;

    /// Lossy conversion used for reporting.
    fn to_f64_lossy(&self) -> f64;

    fn from_i64_exact(v: i64) -> Self {
        Self::from_i64(v).expect("integer conversion")
    }
}

impl Field for f64 {
    fn pivot_tolerance() -> Self {
        1e-10
    }
    fn to_f64_lossy(&self) -> f64 {
        *self
    }
}

impl Field for f32 {
    fn pivot_tolerance() -> Self {
        1e-4
    }
    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }
}

impl Field for BigRational {
    fn pivot_tolerance() -> Self {
        num_traits::Zero::zero()
    }
    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

/// Floating-point scalars.
pub trait Real: Field + Float + FloatConst + ToPrimitive {
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("float literal")
    }
}

impl Real for f64 {}
impl Real for f32 {}

//! Random moment sequences on `[0,1]`, `[0,∞)` and `ℝ`: canonical
//! coordinates, Hankel log-determinants, their Gaussian limit processes,
//! large-deviation functionals, and an exact rational oracle.
//!
//! The algebraic layer is generic over [`scalar::Field`] and runs on
//! `f32`, `f64` and [`Rational`]; the aliases below name the common
//! instantiations.

pub mod error;
pub mod experiments;
pub mod hankel_det;
pub mod ldp;
pub mod limit_theory;
pub mod moment_space;
pub mod oracle;
pub mod quadrature;
pub mod sampling;
pub mod scalar;
pub mod specfun;
pub mod stats;

pub use error::{Error, Result};
pub use moment_space::{CanonicalCoords, IntervalKind, JacobiCoefficients, MomentVector};
pub use sampling::SeedSpec;
pub use scalar::{Field, Real};

/// Exact rationals over arbitrary-precision integers.
pub type Rational = num_rational::BigRational;

pub type MomentVectorF64 = MomentVector<f64>;
pub type CanonicalCoordsF64 = CanonicalCoords<f64>;
pub type JacobiCoefficientsF64 = JacobiCoefficients<f64>;
pub type MomentVectorF32 = MomentVector<f32>;
pub type CanonicalCoordsF32 = CanonicalCoords<f32>;
pub type ExactMomentVector = MomentVector<Rational>;
pub type ExactCanonicalCoords = CanonicalCoords<Rational>;
pub type ExactJacobiCoefficients = JacobiCoefficients<Rational>;

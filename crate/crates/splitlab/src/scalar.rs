//! Scalar abstraction for the numeric core.
//!
//! All network math is generic over [`Scalar`] so the same code runs at
//! `f32` or `f64`. Experiments default to `f64` (see the crate-root
//! aliases): finite-difference checks at `f32` lose too many digits to
//! be useful as acceptance oracles.

use std::fmt::{Debug, Display};

use num_traits::Float;

/// Floating-point scalar usable in network parameters and activations.
pub trait Scalar: Float + Debug + Display + Default + Send + Sync + 'static {}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics only if the target type cannot represent any finite `f64`,
/// which cannot happen for the provided impls.
#[inline]
pub fn from_f64<S: Scalar>(x: f64) -> S {
    S::from(x).expect("f64 constant not representable in scalar type")
}

/// Converts a scalar to `f64` for reporting.
#[inline]
pub fn to_f64<S: Scalar>(x: S) -> f64 {
    x.to_f64().expect("scalar not representable as f64")
}

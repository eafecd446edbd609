//! Floating-point abstraction shared by the geometric and probabilistic code.
//!
//! Everything that does density math is written against [`Scalar`] so the
//! same estimators run in `f32` (embedded targets, GPU staging buffers) or
//! `f64` (evaluation, golden tests). Constants go through [`Scalar::lit`]
//! instead of `T::from_f64(..).unwrap()` at every call site.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    'static
    + Float
    + FloatConst
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
{
    /// Tolerance used when checking that a probability vector sums to one.
    const NORM_TOL: Self;

    /// Converts an `f64` literal. Values used here are always representable.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const NORM_TOL: Self = 1e-5;
}

impl Scalar for f64 {
    const NORM_TOL: Self = 1e-9;
}

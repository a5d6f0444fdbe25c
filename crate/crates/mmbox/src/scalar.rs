//! Scalar abstraction: every numeric routine in this crate is generic over a
//! floating-point type implementing [`Real`].

use num_traits::{Float, FloatConst, FromPrimitive, NumCast};

/// Floating-point scalar for metric and measure arithmetic: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumCast
    + core::fmt::Debug
    + core::fmt::Display
    + core::iter::Sum
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant into the scalar type.
    ///
    /// Panics on values the target type cannot represent at all (never the
    /// case for the finite literals used in this crate).
    fn of(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("finite f64 literal")
    }

    /// Lossy view as `f64`, for diagnostics and serialization headers.
    fn as_f64(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Sorts a slice of finite scalars ascending.
///
/// All values stored in crate types are validated finite at construction, so
/// `partial_cmp` cannot fail here.
pub(crate) fn sort_finite<T: Real>(values: &mut [T]) {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite scalar"));
}

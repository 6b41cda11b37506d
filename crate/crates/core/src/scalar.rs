//! Scalar abstraction so the numeric pipeline runs on `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used throughout the pipeline.
///
/// Implemented for `f32` and `f64` via the blanket impl below. On-disk
/// formats are fixed (`f32` for embedding files, `f64` for matrix and
/// vector files) independently of the in-memory scalar.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum<Self>
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("scalar converts to f64")
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum<T>
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an f64 into the pipeline scalar (rounding to the nearest
/// representable value for narrower types).
pub fn cast<S: Scalar>(v: f64) -> S {
    <S as FromPrimitive>::from_f64(v).expect("finite f64 converts to scalar")
}

/// Converts a count into the pipeline scalar.
pub fn cast_usize<S: Scalar>(v: usize) -> S {
    cast(v as f64)
}

/// Dot product accumulated in index order, so results are identical for
/// any thread count and match an independently written loop bit for bit.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = S::zero();
    for (x, y) in a.iter().zip(b) {
        acc += *x * *y;
    }
    acc
}

/// Euclidean norm with the sum of squares accumulated in f64, which keeps
/// normalized rows within tight norm tolerances even for f32 storage.
pub fn l2_norm_f64<S: Scalar>(v: &[S]) -> f64 {
    let mut acc = 0.0f64;
    for x in v {
        let x = x.as_f64();
        acc += x * x;
    }
    acc.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_is_order_deterministic() {
        let a = vec![0.1f64, 0.2, 0.3];
        let b = vec![0.3f64, 0.2, 0.1];
        assert_eq!(dot(&a, &b), dot(&a, &b));
        assert_eq!(dot(&a, &b), 0.1 * 0.3 + 0.2 * 0.2 + 0.3 * 0.1);
    }

    #[test]
    fn norm_of_345() {
        assert!((l2_norm_f64(&[3.0f32, 4.0]) - 5.0).abs() < 1e-12);
    }
}

//! Scalar abstraction shared by every numeric module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar the geometry, learning and clustering code is generic over.
///
/// Implemented for `f32` and `f64`. Pipeline and file I/O use `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance used when validating the fixed sample period.
    ///
    /// `1e-6` for `f64`; widened for types whose epsilon cannot resolve it.
    #[inline]
    fn period_tolerance() -> Self {
        Self::lit(1e-6).max(Self::epsilon() * Self::lit(1000.0))
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::PI() + T::PI();
    let mut w = a % two_pi;
    if w <= -T::PI() {
        w = w + two_pi;
    } else if w > T::PI() {
        w = w - two_pi;
    }
    w
}

/// Unwraps a sequence of wrapped angles so consecutive differences stay within `pi`.
pub fn unwrap_angles<T: Real>(angles: &[T]) -> Vec<T> {
    let mut out: Vec<T> = Vec::with_capacity(angles.len());
    for (i, &a) in angles.iter().enumerate() {
        match out.last() {
            Some(&prev) => out.push(prev + wrap_angle(a - angles[i - 1])),
            None => out.push(a),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.5 + 4.0 * PI) - 0.5).abs() < 1e-12);
        assert!((wrap_angle(-0.5f32) + 0.5).abs() < 1e-6);
    }

    #[test]
    fn unwrap_crossing() {
        let a = [3.0, -3.0, -2.9];
        let u = unwrap_angles(&a);
        assert!((u[1] - (2.0 * PI - 3.0)).abs() < 1e-12);
        assert!((u[2] - u[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn tolerance_per_type() {
        assert_eq!(f64::period_tolerance(), 1e-6);
        assert!(f32::period_tolerance() > 1e-6);
    }
}

//! Planar points and arc-length polyline utilities.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    #[inline]
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    #[inline]
    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product; positive when `o` is to the left of `self`.
    #[inline]
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    #[inline]
    pub fn angle(self) -> T {
        self.y.atan2(self.x)
    }

    #[inline]
    pub fn lerp(self, o: Self, u: T) -> Self {
        self + (o - self) * u
    }

    /// Rotates counter-clockwise by `theta`.
    #[inline]
    pub fn rotate(self, theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Real> Add for Point2<T> {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Real> Sub for Point2<T> {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Real> Mul<T> for Point2<T> {
    type Output = Self;
    #[inline]
    fn mul(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl<T: Real> Neg for Point2<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

/// Cumulative arc length; `[0]` for a single point, empty for no points.
pub fn arc_length<T: Real>(points: &[Point2<T>]) -> Vec<T> {
    let mut out = Vec::with_capacity(points.len());
    let mut acc = T::zero();
    for (i, p) in points.iter().enumerate() {
        if i > 0 {
            acc = acc + p.distance(points[i - 1]);
        }
        out.push(acc);
    }
    out
}

pub fn polyline_length<T: Real>(points: &[Point2<T>]) -> T {
    points.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Resamples a polyline at `n_out` points evenly spaced in normalized arc length.
///
/// Interior points are linear interpolations on the input segments; the two
/// endpoints are copied from the input unchanged.
pub fn resample_polyline<T: Real>(points: &[Point2<T>], n_out: usize) -> Result<Vec<Point2<T>>> {
    if points.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "resampling needs at least 2 points, got {}",
            points.len()
        )));
    }
    if n_out < 2 {
        return Err(Error::InvalidInput(format!(
            "resampling needs n_out >= 2, got {n_out}"
        )));
    }
    let s = arc_length(points);
    let total = s[s.len() - 1];
    if !(total > T::zero()) {
        return Err(Error::DegeneratePolyline);
    }

    let last = points.len() - 1;
    let denom = T::from_usize_lossy(n_out - 1);
    let mut out = Vec::with_capacity(n_out);
    out.push(points[0]);
    let mut seg = 0;
    for k in 1..n_out - 1 {
        let target = total * T::from_usize_lossy(k) / denom;
        while seg + 1 < last && s[seg + 1] <= target {
            seg += 1;
        }
        let len = s[seg + 1] - s[seg];
        let u = if len > T::zero() {
            ((target - s[seg]) / len).max(T::zero()).min(T::one())
        } else {
            T::zero()
        };
        out.push(points[seg].lerp(points[seg + 1], u));
    }
    out.push(points[last]);
    Ok(out)
}

/// Signed turning angle at every interior vertex (`len - 2` values).
///
/// Zero-length segments contribute an angle of zero.
pub fn turning_angles<T: Real>(points: &[Point2<T>]) -> Vec<T> {
    points
        .windows(3)
        .map(|w| {
            let a = w[1] - w[0];
            let b = w[2] - w[1];
            if a.norm() == T::zero() || b.norm() == T::zero() {
                T::zero()
            } else {
                a.cross(b).atan2(a.dot(b))
            }
        })
        .collect()
}

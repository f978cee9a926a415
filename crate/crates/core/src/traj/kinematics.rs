use crate::error::{Error, Result};
use crate::num::{unwrap_angles, wrap_angle, Real};

use super::{Point2, Waypoint};

/// Finite-difference derivative of `values` over the time stamps `t`:
/// central in the interior, one-sided at the two ends.
pub fn finite_difference<T: Real>(t: &[T], values: &[T]) -> Vec<T> {
    let n = values.len();
    if n < 2 {
        return vec![T::zero(); n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = match i {
                0 => (0, 1),
                i if i == n - 1 => (n - 2, n - 1),
                i => (i - 1, i + 1),
            };
            (values[b] - values[a]) / (t[b] - t[a])
        })
        .collect()
}

/// Rebuilds heading, speed, acceleration and yaw rate from timed positions.
///
/// Heading and speed come from the displacement across each sample
/// (central in the interior, one-sided at the ends). Acceleration and yaw
/// rate are central differences of the per-segment speed and unwrapped
/// segment heading, so both are exact for uniform circular motion; the two
/// end samples take the one-sided value of their only neighbouring pair of
/// segments. A sample with no displacement keeps the heading of its nearest
/// moving neighbour.
pub fn derive_kinematics<T: Real>(points: &[(T, T, T)]) -> Result<Vec<Waypoint<T>>> {
    let n = points.len();
    if n < 2 {
        return Err(Error::DegenerateInput(format!(
            "kinematics need at least 2 points, got {n}"
        )));
    }
    for (i, w) in points.windows(2).enumerate() {
        if !(w[1].0 > w[0].0) {
            return Err(Error::InvalidTime(format!(
                "timestamps not strictly increasing at index {}",
                i + 1
            )));
        }
    }
    if points
        .iter()
        .any(|&(t, x, y)| !(t.is_finite() && x.is_finite() && y.is_finite()))
    {
        return Err(Error::DegenerateInput("non-finite coordinate".into()));
    }

    let t: Vec<T> = points.iter().map(|p| p.0).collect();
    let pos: Vec<Point2<T>> = points.iter().map(|p| Point2::new(p.1, p.2)).collect();

    let mut speed = Vec::with_capacity(n);
    let mut raw_heading: Vec<Option<T>> = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = match i {
            0 => (0, 1),
            i if i == n - 1 => (n - 2, n - 1),
            i => (i - 1, i + 1),
        };
        let d = pos[b] - pos[a];
        let len = d.norm();
        speed.push(len / (t[b] - t[a]));
        raw_heading.push((len > T::zero()).then(|| d.angle()));
    }

    fill_gaps(&mut raw_heading);
    let heading: Vec<T> = raw_heading.into_iter().map(|h| h.unwrap_or(T::zero())).collect();

    let (accel, yaw_rate) = staggered_rates(&t, &pos);
    Ok((0..n)
        .map(|i| Waypoint {
            t: t[i],
            x: pos[i].x,
            y: pos[i].y,
            heading: wrap_angle(heading[i]),
            speed: speed[i],
            accel: accel[i],
            yaw_rate: yaw_rate[i],
        })
        .collect())
}

/// Central differences on the segment grid: speed and heading live on the
/// segments between samples, their rates on the samples.
fn staggered_rates<T: Real>(t: &[T], pos: &[Point2<T>]) -> (Vec<T>, Vec<T>) {
    let n = pos.len();
    let segs = n - 1;
    let seg_speed: Vec<T> = (0..segs)
        .map(|i| pos[i].distance(pos[i + 1]) / (t[i + 1] - t[i]))
        .collect();
    let mut seg_heading: Vec<Option<T>> = (0..segs)
        .map(|i| {
            let d = pos[i + 1] - pos[i];
            (d.norm() > T::zero()).then(|| d.angle())
        })
        .collect();
    fill_gaps(&mut seg_heading);
    let heading = unwrap_angles(&seg_heading.into_iter().map(|h| h.unwrap_or(T::zero())).collect::<Vec<_>>());

    if segs == 1 {
        return (vec![T::zero(); n], vec![T::zero(); n]);
    }
    let rate = |vals: &[T], i: usize| {
        let span = (t[i + 1] - t[i - 1]) / T::lit(2.0);
        (vals[i] - vals[i - 1]) / span
    };
    let mut accel = vec![T::zero(); n];
    let mut yaw = vec![T::zero(); n];
    for i in 1..n - 1 {
        accel[i] = rate(&seg_speed, i);
        yaw[i] = rate(&heading, i);
    }
    accel[0] = accel[1];
    yaw[0] = yaw[1];
    accel[n - 1] = accel[n - 2];
    yaw[n - 1] = yaw[n - 2];
    (accel, yaw)
}

fn fill_gaps<T: Copy>(v: &mut [Option<T>]) {
    let mut last = None;
    for x in v.iter_mut() {
        match x {
            Some(h) => last = Some(*h),
            None => *x = last,
        }
    }
    if let Some(first) = v.iter().position(Option::is_some) {
        let h = v[first];
        for x in v.iter_mut().take(first) {
            *x = h;
        }
    }
}

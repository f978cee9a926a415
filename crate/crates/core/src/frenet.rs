//! Frenet-frame projection and the originator similarity deltas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{wrap_angle, Real};
use crate::traj::{arc_length, resample_polyline, Point2, Trajectory};

/// Arc-length coordinate `s` and signed lateral offset `d` (left positive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrenetCoord<T> {
    pub s: T,
    pub d: T,
}

/// Projects `p` onto the nearest point of the reference polyline.
///
/// Points beyond either end clamp `s` to `0` or `L` and measure `d`
/// perpendicular to the terminal segment's line. Equidistant candidates
/// resolve to the smallest `s`.
pub fn project_point<T: Real>(reference: &[Point2<T>], p: Point2<T>) -> Result<FrenetCoord<T>> {
    if reference.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "Frenet reference needs at least 2 points, got {}",
            reference.len()
        )));
    }
    let cum = arc_length(reference);
    if !(cum[cum.len() - 1] > T::zero()) {
        return Err(Error::DegeneratePolyline);
    }
    if let Some(i) = reference.iter().position(|&v| v == p) {
        return Ok(FrenetCoord { s: cum[i], d: T::zero() });
    }
    let first_seg = reference.windows(2).position(|w| w[0] != w[1]).unwrap_or(0);
    let last_seg = reference.windows(2).rposition(|w| w[0] != w[1]).unwrap_or(0);

    // (distance, s, signed d)
    let mut best: Option<(T, T, T)> = None;
    for (j, w) in reference.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let seg = b - a;
        let len2 = seg.dot(seg);
        if len2 == T::zero() {
            continue;
        }
        let len = len2.sqrt();
        let raw_u = (p - a).dot(seg) / len2;
        let u = raw_u.max(T::zero()).min(T::one());
        let foot = a + seg * u;
        let dist = p.distance(foot);
        let beyond = (j == first_seg && raw_u < T::zero()) || (j == last_seg && raw_u > T::one());
        let d = if beyond {
            seg.cross(p - foot) / len
        } else {
            let side = seg.cross(p - foot);
            if side < T::zero() {
                -dist
            } else {
                dist
            }
        };
        let s = cum[j] + u * len;
        match best {
            Some((bd, _, _)) if bd <= dist => {}
            _ => best = Some((dist, s, d)),
        }
    }
    let (_, s, d) = best.expect("reference has a non-degenerate segment");
    Ok(FrenetCoord { s, d })
}

/// Re-expresses a trajectory in the frame of its own start pose: first
/// point at the origin, first heading along `+x`.
pub fn normalize_pose<T: Real>(traj: &Trajectory<T>) -> Trajectory<T> {
    let first = traj.waypoints[0];
    let origin = first.pos();
    let rot = -first.heading;
    let mut out = traj.clone();
    for w in &mut out.waypoints {
        let q = (w.pos() - origin).rotate(rot);
        w.x = q.x;
        w.y = q.y;
        w.heading = wrap_angle(w.heading + rot);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reduction {
    #[default]
    Max,
    Mean,
    Rms,
}

impl Reduction {
    pub fn reduce<T: Real>(self, values: &[T]) -> T {
        if values.is_empty() {
            return T::zero();
        }
        let n = T::from_usize_lossy(values.len());
        match self {
            Reduction::Max => values.iter().copied().fold(T::zero(), T::max),
            Reduction::Mean => values.iter().copied().sum::<T>() / n,
            Reduction::Rms => (values.iter().map(|v| *v * *v).sum::<T>() / n).sqrt(),
        }
    }
}

/// How each per-point delta sequence is reduced to one number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeltaReductions {
    pub lon: Reduction,
    pub lat: Reduction,
    pub vel: Reduction,
}

impl Default for DeltaReductions {
    fn default() -> Self {
        Self {
            lon: Reduction::Max,
            lat: Reduction::Max,
            vel: Reduction::Mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityDeltas<T> {
    pub delta_lon: T,
    pub delta_lat: T,
    pub delta_vel: T,
}

/// Deltas between two trajectories, each first normalized to its own start
/// pose, with the original as the Frenet reference.
pub fn similarity_deltas<T: Real>(
    original: &Trajectory<T>,
    guide: &Trajectory<T>,
    reductions: &DeltaReductions,
) -> Result<SimilarityDeltas<T>> {
    let o = normalize_pose(original);
    let g = normalize_pose(guide);
    deltas_in_frame(&o.positions(), &o.speeds(), &g.positions(), &g.speeds(), reductions)
}

/// Deltas between point sequences already expressed in a common frame.
///
/// The guide is brought to the original's point count by arc-length
/// resampling (speeds by linear interpolation in normalized index) only
/// when the counts differ; points are then compared index by index.
pub fn deltas_in_frame<T: Real>(
    original: &[Point2<T>],
    original_speed: &[T],
    guide: &[Point2<T>],
    guide_speed: &[T],
    reductions: &DeltaReductions,
) -> Result<SimilarityDeltas<T>> {
    let n = original.len();
    if original_speed.len() != n || guide_speed.len() != guide.len() {
        return Err(Error::ShapeMismatch("speed and position counts differ".into()));
    }
    let (g_pts, g_speed) = if guide.len() == n {
        (guide.to_vec(), guide_speed.to_vec())
    } else {
        (resample_polyline(guide, n)?, resample_by_index(guide_speed, n))
    };
    let s_orig = arc_length(original);
    let mut lon = Vec::with_capacity(n);
    let mut lat = Vec::with_capacity(n);
    let mut vel = Vec::with_capacity(n);
    for i in 0..n {
        let fc = project_point(original, g_pts[i])?;
        lon.push((fc.s - s_orig[i]).abs());
        lat.push(fc.d.abs());
        vel.push((g_speed[i] - original_speed[i]).abs());
    }
    Ok(SimilarityDeltas {
        delta_lon: reductions.lon.reduce(&lon),
        delta_lat: reductions.lat.reduce(&lat),
        delta_vel: reductions.vel.reduce(&vel),
    })
}

fn resample_by_index<T: Real>(values: &[T], n: usize) -> Vec<T> {
    let m = values.len();
    if m == 1 || n == 1 {
        return vec![values[0]; n];
    }
    (0..n)
        .map(|i| {
            let x = T::from_usize_lossy(i) * T::from_usize_lossy(m - 1) / T::from_usize_lossy(n - 1);
            let lo = x.floor().to_usize().unwrap_or(0).min(m - 2);
            let u = x - T::from_usize_lossy(lo);
            values[lo] + (values[lo + 1] - values[lo]) * u
        })
        .collect()
}

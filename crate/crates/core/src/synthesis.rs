//! Within-cluster pairing and endpoint-constrained similarity synthesis.
//!
//! A synthetic trajectory takes the shape of a guide trajectory and the
//! start and end points of an original trajectory: the guide is rotated,
//! uniformly scaled and translated so its endpoints land on the original's,
//! resampled to the original's point count, and given the original's time
//! stamps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::traj::{resample_polyline, traj_id_for, Point2, Trajectory};

/// Default minimum chord length for a pair member, metres.
pub const DEFAULT_MIN_CHORD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CandidatePair {
    pub cluster_label: String,
    pub original_id: String,
    pub guide_id: String,
}

/// Every ordered `(original, guide)` pair of distinct members, sorted by id.
pub fn enumerate_pairs<S: AsRef<str>>(cluster_label: &str, members: &[S]) -> Vec<CandidatePair> {
    let mut ids: Vec<&str> = members.iter().map(AsRef::as_ref).collect();
    ids.sort_unstable();
    ids.dedup();
    let mut out = Vec::with_capacity(ids.len() * ids.len().saturating_sub(1));
    for &o in &ids {
        for &g in &ids {
            if o != g {
                out.push(CandidatePair {
                    cluster_label: cluster_label.to_string(),
                    original_id: o.to_string(),
                    guide_id: g.to_string(),
                });
            }
        }
    }
    out
}

/// `p -> scale * R(theta) * p + translation`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform<T> {
    pub theta: T,
    pub scale: T,
    pub translation: Point2<T>,
}

impl<T: Real> SimilarityTransform<T> {
    pub fn identity() -> Self {
        Self {
            theta: T::zero(),
            scale: T::one(),
            translation: Point2::origin(),
        }
    }

    #[inline]
    pub fn apply_point(&self, p: Point2<T>) -> Point2<T> {
        p.rotate(self.theta) * self.scale + self.translation
    }

    pub fn apply(&self, points: &[Point2<T>]) -> Vec<Point2<T>> {
        points.iter().map(|p| self.apply_point(*p)).collect()
    }
}

/// The unique similarity transform carrying the guide's first and last
/// positions onto the original's.
pub fn fit_endpoint_transform<T: Real>(
    guide: &[Point2<T>],
    original: &[Point2<T>],
    min_chord: T,
) -> Result<SimilarityTransform<T>> {
    let (Some(&g0), Some(&g1), Some(&o0), Some(&o1)) =
        (guide.first(), guide.last(), original.first(), original.last())
    else {
        return Err(Error::DegenerateInput("empty trajectory in pair".into()));
    };
    let gc = g1 - g0;
    let oc = o1 - o0;
    for len in [gc.norm(), oc.norm()] {
        if !(len >= min_chord) {
            return Err(Error::DegenerateChord {
                length: len.to_f64_lossy(),
                min: min_chord.to_f64_lossy(),
            });
        }
    }
    let theta = oc.angle() - gc.angle();
    let scale = oc.norm() / gc.norm();
    let translation = o0 - g0.rotate(theta) * scale;
    Ok(SimilarityTransform {
        theta,
        scale,
        translation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthesisConfig {
    pub min_chord: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            min_chord: DEFAULT_MIN_CHORD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisProvenance<T> {
    pub original_id: String,
    pub guide_id: String,
    pub cluster_label: String,
    pub transform: SimilarityTransform<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTrajectory<T> {
    pub trajectory: Trajectory<T>,
    pub provenance: SynthesisProvenance<T>,
}

/// Scene id given to a synthetic trajectory built from `original` and `guide`.
pub fn synthetic_scene_id(original_id: &str, guide_id: &str) -> String {
    format!("{original_id}~{guide_id}")
}

/// Synthesizes one trajectory: fit transform, apply it to the guide,
/// resample to the original's count, pin the endpoints, copy the original's
/// time stamps and re-derive kinematics.
pub fn synthesize<T: Real>(
    original: &Trajectory<T>,
    guide: &Trajectory<T>,
    cluster_label: &str,
    config: &SynthesisConfig,
) -> Result<SyntheticTrajectory<T>> {
    let o_pts = original.positions();
    let g_pts = guide.positions();
    let transform = fit_endpoint_transform(&g_pts, &o_pts, T::lit(config.min_chord))?;
    let moved = transform.apply(&g_pts);
    let n = o_pts.len();
    let mut pts = resample_polyline(&moved, n)?;
    pts[0] = o_pts[0];
    pts[n - 1] = o_pts[n - 1];

    let timed: Vec<(T, T, T)> = original
        .waypoints
        .iter()
        .zip(&pts)
        .map(|(w, p)| (w.t, p.x, p.y))
        .collect();
    let scene_id = synthetic_scene_id(&original.traj_id, &guide.traj_id);
    let trajectory = Trajectory::from_timed_points(
        traj_id_for(&scene_id, &original.agent_id),
        original.agent_id.clone(),
        scene_id,
        &timed,
    )?;
    Ok(SyntheticTrajectory {
        trajectory,
        provenance: SynthesisProvenance {
            original_id: original.traj_id.clone(),
            guide_id: guide.traj_id.clone(),
            cluster_label: cluster_label.to_string(),
            transform,
        },
    })
}

/// Stable reason code for a rejected pair.
pub fn rejection_code(err: &Error) -> &'static str {
    match err {
        Error::DegenerateChord { .. } => "degenerate_chord",
        Error::DegeneratePolyline => "degenerate_polyline",
        Error::InvalidTime(_) => "invalid_time",
        _ => "invalid_output",
    }
}

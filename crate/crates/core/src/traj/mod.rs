//! Trajectory and scene data model shared by every stage.

mod kinematics;
mod polyline;

pub use kinematics::{derive_kinematics, finite_difference};
pub use polyline::{arc_length, polyline_length, resample_polyline, turning_angles, Point2};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{wrap_angle, Real};

/// Fixed sample period of every trajectory in the toolkit (10 Hz).
pub const SAMPLE_PERIOD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint<T> {
    pub t: T,
    pub x: T,
    pub y: T,
    /// Radians in `(-pi, pi]`.
    pub heading: T,
    pub speed: T,
    pub accel: T,
    pub yaw_rate: T,
}

impl<T: Real> Waypoint<T> {
    #[inline]
    pub fn pos(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }

    fn is_finite(&self) -> bool {
        [self.t, self.x, self.y, self.heading, self.speed, self.accel, self.yaw_rate]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Time-ordered waypoints of one agent at the fixed sample period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub traj_id: String,
    pub agent_id: String,
    pub scene_id: String,
    pub waypoints: Vec<Waypoint<T>>,
}

impl<T: Real> Trajectory<T> {
    /// Builds a trajectory, normalizing headings and checking the invariants.
    pub fn new(
        traj_id: impl Into<String>,
        agent_id: impl Into<String>,
        scene_id: impl Into<String>,
        mut waypoints: Vec<Waypoint<T>>,
    ) -> Result<Self> {
        for w in &mut waypoints {
            w.heading = wrap_angle(w.heading);
        }
        let traj = Self {
            traj_id: traj_id.into(),
            agent_id: agent_id.into(),
            scene_id: scene_id.into(),
            waypoints,
        };
        traj.validate()?;
        Ok(traj)
    }

    /// Builds a trajectory from timed positions, deriving kinematics.
    pub fn from_timed_points(
        traj_id: impl Into<String>,
        agent_id: impl Into<String>,
        scene_id: impl Into<String>,
        points: &[(T, T, T)],
    ) -> Result<Self> {
        Self::new(traj_id, agent_id, scene_id, derive_kinematics(points)?)
    }

    pub fn validate(&self) -> Result<()> {
        let id = &self.traj_id;
        let wps = &self.waypoints;
        if wps.len() < 2 {
            return Err(Error::InvalidTrajectory(format!(
                "{id}: needs at least 2 waypoints, got {}",
                wps.len()
            )));
        }
        if let Some(i) = wps.iter().position(|w| !w.is_finite()) {
            return Err(Error::InvalidTrajectory(format!(
                "{id}: non-finite field at waypoint {i}"
            )));
        }
        if let Some(i) = wps.iter().position(|w| w.speed < T::zero()) {
            return Err(Error::InvalidTrajectory(format!(
                "{id}: negative speed at waypoint {i}"
            )));
        }
        let dt = T::lit(SAMPLE_PERIOD);
        let tol = dt * T::period_tolerance();
        for (i, w) in wps.windows(2).enumerate() {
            let step = w[1].t - w[0].t;
            if !(step > T::zero()) {
                return Err(Error::InvalidTime(format!(
                    "{id}: timestamps not strictly increasing at waypoint {}",
                    i + 1
                )));
            }
            if (step - dt).abs() > tol {
                return Err(Error::InvalidTime(format!(
                    "{id}: sample period {step} at waypoint {} differs from {SAMPLE_PERIOD} s",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn positions(&self) -> Vec<Point2<T>> {
        self.waypoints.iter().map(Waypoint::pos).collect()
    }

    pub fn times(&self) -> Vec<T> {
        self.waypoints.iter().map(|w| w.t).collect()
    }

    pub fn speeds(&self) -> Vec<T> {
        self.waypoints.iter().map(|w| w.speed).collect()
    }

    pub fn start_time(&self) -> T {
        self.waypoints[0].t
    }

    pub fn end_time(&self) -> T {
        self.waypoints[self.waypoints.len() - 1].t
    }

    pub fn duration(&self) -> T {
        self.end_time() - self.start_time()
    }

    pub fn length(&self) -> T {
        polyline_length(&self.positions())
    }
}

/// Agents recorded together on a shared time base; one of them is the ego.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene<T> {
    pub scene_id: String,
    pub ego_traj_id: String,
    pub agent_trajectories: Vec<Trajectory<T>>,
}

impl<T: Real> Scene<T> {
    pub fn new(
        scene_id: impl Into<String>,
        ego_traj_id: impl Into<String>,
        agent_trajectories: Vec<Trajectory<T>>,
    ) -> Result<Self> {
        let scene = Self {
            scene_id: scene_id.into(),
            ego_traj_id: ego_traj_id.into(),
            agent_trajectories,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        let sid = &self.scene_id;
        let egos = self
            .agent_trajectories
            .iter()
            .filter(|t| t.traj_id == self.ego_traj_id)
            .count();
        if egos != 1 {
            return Err(Error::InvalidTrajectory(format!(
                "scene {sid}: ego {} present {egos} times",
                self.ego_traj_id
            )));
        }
        let mut ids = BTreeSet::new();
        for t in &self.agent_trajectories {
            t.validate()?;
            if !ids.insert(t.traj_id.as_str()) {
                return Err(Error::InvalidTrajectory(format!(
                    "scene {sid}: duplicate trajectory id {}",
                    t.traj_id
                )));
            }
        }
        let ego = self.ego();
        for t in self.others() {
            if t.end_time() < ego.start_time() || t.start_time() > ego.end_time() {
                return Err(Error::InvalidTime(format!(
                    "scene {sid}: agent {} does not overlap the ego time range",
                    t.traj_id
                )));
            }
        }
        Ok(())
    }

    pub fn ego(&self) -> &Trajectory<T> {
        self.agent_trajectories
            .iter()
            .find(|t| t.traj_id == self.ego_traj_id)
            .expect("validated scene has an ego")
    }

    /// Every trajectory except the ego.
    pub fn others(&self) -> impl Iterator<Item = &Trajectory<T>> {
        self.agent_trajectories
            .iter()
            .filter(move |t| t.traj_id != self.ego_traj_id)
    }
}

/// Conventional trajectory id of an agent inside a scene.
pub fn traj_id_for(scene_id: &str, agent_id: &str) -> String {
    format!("{scene_id}/{agent_id}")
}

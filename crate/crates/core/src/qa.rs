//! Acceptance gates for synthesized trajectories.
//!
//! Gates run in a fixed order (similarity, collision, comfort, progress) and
//! every gate is always evaluated so a report lists all failures.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frenet::{similarity_deltas, DeltaReductions};
use crate::num::Real;
use crate::traj::{finite_difference, Scene, Trajectory, SAMPLE_PERIOD};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QaThresholds {
    pub delta_lon_max: f64,
    pub delta_lat_max: f64,
    pub delta_vel_max: f64,
    pub collision_radius: f64,
    pub accel_max: f64,
    pub jerk_max: f64,
    pub curvature_max: f64,
    pub avg_speed_min: f64,
    pub avg_speed_max: f64,
    /// Speed floor for the curvature estimate `yaw_rate / speed`.
    pub v_floor: f64,
    pub reductions: DeltaReductions,
}

impl Default for QaThresholds {
    fn default() -> Self {
        Self {
            delta_lon_max: 5.0,
            delta_lat_max: 1.5,
            delta_vel_max: 2.0,
            collision_radius: 2.0,
            accel_max: 4.0,
            jerk_max: 10.0,
            curvature_max: 0.2,
            avg_speed_min: 0.5,
            avg_speed_max: 40.0,
            v_floor: 0.5,
            reductions: DeltaReductions::default(),
        }
    }
}

impl QaThresholds {
    pub fn validate(&self) -> Result<()> {
        let named = [
            ("delta_lon_max", self.delta_lon_max),
            ("delta_lat_max", self.delta_lat_max),
            ("delta_vel_max", self.delta_vel_max),
            ("collision_radius", self.collision_radius),
            ("accel_max", self.accel_max),
            ("jerk_max", self.jerk_max),
            ("curvature_max", self.curvature_max),
            ("avg_speed_min", self.avg_speed_min),
            ("avg_speed_max", self.avg_speed_max),
            ("v_floor", self.v_floor),
        ];
        if let Some((name, v)) = named.iter().find(|(_, v)| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config(format!("qa.{name} must be positive, got {v}")));
        }
        if self.avg_speed_min > self.avg_speed_max {
            return Err(Error::Config("qa.avg_speed_min exceeds qa.avg_speed_max".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    Similarity,
    Collision,
    Comfort,
    Progress,
}

impl Gate {
    /// Attribution order for rejection histograms.
    pub const ORDER: [Gate; 4] = [Gate::Similarity, Gate::Collision, Gate::Comfort, Gate::Progress];

    pub fn name(self) -> &'static str {
        match self {
            Gate::Similarity => "similarity",
            Gate::Collision => "collision",
            Gate::Comfort => "comfort",
            Gate::Progress => "progress",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub gate: Gate,
    pub passed: bool,
    pub measured: BTreeMap<String, f64>,
    pub thresholds: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl GateRecord {
    fn new(gate: Gate) -> Self {
        Self {
            gate,
            passed: true,
            measured: BTreeMap::new(),
            thresholds: BTreeMap::new(),
            note: None,
        }
    }

    fn measure(&mut self, key: &str, v: f64) {
        self.measured.insert(key.to_string(), v);
    }

    fn limit(&mut self, key: &str, v: f64) {
        self.thresholds.insert(key.to_string(), v);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QaReport {
    pub gates: Vec<GateRecord>,
    pub accepted: bool,
}

impl QaReport {
    pub fn from_gates(gates: Vec<GateRecord>) -> Self {
        let accepted = gates.iter().all(|g| g.passed);
        Self { gates, accepted }
    }

    pub fn gate(&self, gate: Gate) -> Option<&GateRecord> {
        self.gates.iter().find(|g| g.gate == gate)
    }

    pub fn failed(&self) -> Vec<Gate> {
        self.gates.iter().filter(|g| !g.passed).map(|g| g.gate).collect()
    }

    /// First failing gate in [`Gate::ORDER`].
    pub fn first_failure(&self) -> Option<Gate> {
        Gate::ORDER
            .into_iter()
            .find(|g| self.gate(*g).is_some_and(|r| !r.passed))
    }
}

/// Passes iff every delta is strictly below its threshold. Degenerate
/// geometry fails the gate with a note rather than erroring.
pub fn similarity_gate<T: Real>(
    original: &Trajectory<T>,
    guide: &Trajectory<T>,
    th: &QaThresholds,
) -> GateRecord {
    let mut rec = GateRecord::new(Gate::Similarity);
    rec.limit("delta_lon_max", th.delta_lon_max);
    rec.limit("delta_lat_max", th.delta_lat_max);
    rec.limit("delta_vel_max", th.delta_vel_max);
    match similarity_deltas(original, guide, &th.reductions) {
        Ok(d) => {
            let (lon, lat, vel) = (
                d.delta_lon.to_f64_lossy(),
                d.delta_lat.to_f64_lossy(),
                d.delta_vel.to_f64_lossy(),
            );
            rec.measure("delta_lon", lon);
            rec.measure("delta_lat", lat);
            rec.measure("delta_vel", vel);
            rec.passed = lon < th.delta_lon_max && lat < th.delta_lat_max && vel < th.delta_vel_max;
        }
        Err(e) => {
            rec.passed = false;
            rec.note = Some(e.to_string());
        }
    }
    rec
}

/// Checks every synthetic waypoint against every non-ego agent present at
/// the same frame (nearest frame within half a sample period).
pub fn collision_gate<T: Real>(
    synthetic: &Trajectory<T>,
    scene: &Scene<T>,
    th: &QaThresholds,
) -> Result<GateRecord> {
    let ego_agent = &scene.ego().agent_id;
    let mut agents: Vec<&Trajectory<T>> = scene.others().collect();
    if let Some(a) = agents
        .iter()
        .find(|a| &a.agent_id == ego_agent || a.agent_id == synthetic.agent_id)
    {
        return Err(Error::Config(format!(
            "scene {}: ego agent {} is listed among the other agents",
            scene.scene_id, a.agent_id
        )));
    }
    agents.sort_by(|a, b| a.traj_id.cmp(&b.traj_id));

    let dt = T::lit(SAMPLE_PERIOD);
    let half = dt / T::lit(2.0);
    let radius = T::lit(th.collision_radius);
    let mut rec = GateRecord::new(Gate::Collision);
    rec.limit("collision_radius", th.collision_radius);
    let mut min_dist: Option<T> = None;
    let mut first_hit: Option<(T, &str, T)> = None;

    for w in &synthetic.waypoints {
        for a in &agents {
            let k = ((w.t - a.start_time()) / dt).round();
            if k < T::zero() {
                continue;
            }
            let Some(aw) = k.to_usize().and_then(|k| a.waypoints.get(k)) else {
                continue;
            };
            if (aw.t - w.t).abs() > half {
                continue;
            }
            let d = w.pos().distance(aw.pos());
            min_dist = Some(min_dist.map_or(d, |m: T| m.min(d)));
            if d < radius && first_hit.is_none() {
                first_hit = Some((w.t, a.traj_id.as_str(), d));
            }
        }
    }
    if let Some(m) = min_dist {
        rec.measure("min_distance", m.to_f64_lossy());
    }
    rec.measure("agents_checked", agents.len() as f64);
    if let Some((t, id, d)) = first_hit {
        rec.passed = false;
        rec.measure("first_collision_t", t.to_f64_lossy());
        rec.measure("first_collision_distance", d.to_f64_lossy());
        rec.note = Some(format!("collision with {id}"));
    }
    Ok(rec)
}

/// Bounds on |accel|, |jerk| and |curvature|. Curvature is
/// `yaw_rate / max(speed, v_floor)` and is not applicable when every sample
/// is slower than `v_floor`.
pub fn comfort_gate<T: Real>(synthetic: &Trajectory<T>, th: &QaThresholds) -> GateRecord {
    let wps = &synthetic.waypoints;
    let accel: Vec<T> = wps.iter().map(|w| w.accel).collect();
    let jerk = finite_difference(&synthetic.times(), &accel);
    let max_abs = |v: &[T]| v.iter().fold(T::zero(), |m, x| m.max(x.abs())).to_f64_lossy();
    let max_accel = max_abs(&accel);
    let max_jerk = max_abs(&jerk);
    let v_floor = T::lit(th.v_floor);

    let mut rec = GateRecord::new(Gate::Comfort);
    rec.limit("accel_max", th.accel_max);
    rec.limit("jerk_max", th.jerk_max);
    rec.limit("curvature_max", th.curvature_max);
    rec.measure("max_accel", max_accel);
    rec.measure("max_jerk", max_jerk);
    let mut passed = max_accel <= th.accel_max && max_jerk <= th.jerk_max;
    if wps.iter().all(|w| w.speed < v_floor) {
        rec.note = Some("curvature not applicable: speed below floor".into());
    } else {
        let curv: Vec<T> = wps.iter().map(|w| w.yaw_rate / w.speed.max(v_floor)).collect();
        let max_curv = max_abs(&curv);
        rec.measure("max_curvature", max_curv);
        passed &= max_curv <= th.curvature_max;
    }
    rec.passed = passed;
    rec
}

/// Average speed (length over duration) within `[avg_speed_min, avg_speed_max]`.
pub fn progress_gate<T: Real>(synthetic: &Trajectory<T>, th: &QaThresholds) -> Result<GateRecord> {
    let duration = synthetic.duration();
    if !(duration > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "{}: zero duration",
            synthetic.traj_id
        )));
    }
    let avg = (synthetic.length() / duration).to_f64_lossy();
    let mut rec = GateRecord::new(Gate::Progress);
    rec.limit("avg_speed_min", th.avg_speed_min);
    rec.limit("avg_speed_max", th.avg_speed_max);
    rec.measure("avg_speed", avg);
    rec.passed = avg >= th.avg_speed_min && avg <= th.avg_speed_max;
    Ok(rec)
}

/// Runs all gates; only configuration errors abort.
pub fn run_qa<T: Real>(
    synthetic: &Trajectory<T>,
    original: &Trajectory<T>,
    guide: &Trajectory<T>,
    scene: &Scene<T>,
    th: &QaThresholds,
) -> Result<QaReport> {
    let similarity = similarity_gate(original, guide, th);
    let collision = collision_gate(synthetic, scene, th)?;
    let comfort = comfort_gate(synthetic, th);
    let progress = progress_gate(synthetic, th)?;
    Ok(QaReport::from_gates(vec![similarity, collision, comfort, progress]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj(id: &str, agent: &str, pts: &[(f64, f64)]) -> Trajectory<f64> {
        let timed: Vec<_> = pts
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| (i as f64 * SAMPLE_PERIOD, x, y))
            .collect();
        Trajectory::from_timed_points(id, agent, "s", &timed).unwrap()
    }

    fn straight(id: &str, agent: &str, n: usize, step: f64, y: f64) -> Trajectory<f64> {
        traj(id, agent, &(0..n).map(|i| (i as f64 * step, y)).collect::<Vec<_>>())
    }

    fn scene_with(agents: Vec<Trajectory<f64>>) -> Scene<f64> {
        let mut all = vec![straight("s/ego", "ego", 31, 1.0, 0.0)];
        all.extend(agents);
        Scene::new("s", "s/ego", all).unwrap()
    }

    #[test]
    fn similarity_identity_passes() {
        let o = straight("o", "ego", 20, 1.0, 0.0);
        let r = similarity_gate(&o, &o, &QaThresholds::default());
        assert!(r.passed);
        assert_eq!(r.measured["delta_lat"], 0.0);
    }

    /// Guide runs along the x-axis for one step, then jumps to `y = offset`.
    fn offset_guide(offset: f64) -> Trajectory<f64> {
        let mut pts = vec![(0.0, 0.0), (1.0, 0.0)];
        pts.extend((2..20).map(|i| (i as f64, offset)));
        traj("g", "ego", &pts)
    }

    #[test]
    fn similarity_lateral_offset_fails() {
        let o = straight("o", "ego", 20, 1.0, 0.0);
        let th = QaThresholds {
            delta_lat_max: 1.5,
            delta_lon_max: 100.0,
            delta_vel_max: 100.0,
            ..QaThresholds::default()
        };
        let r = similarity_gate(&o, &offset_guide(3.0), &th);
        assert!(!r.passed);
        assert!((r.measured["delta_lat"] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn similarity_boundary_is_strict() {
        let o = straight("o", "ego", 20, 1.0, 0.0);
        let g = offset_guide(1.0);
        let loose = QaThresholds {
            delta_lon_max: 100.0,
            delta_vel_max: 100.0,
            ..QaThresholds::default()
        };
        let measured = similarity_gate(&o, &g, &loose).measured["delta_lat"];
        let at = QaThresholds {
            delta_lat_max: measured,
            ..loose.clone()
        };
        assert!(!similarity_gate(&o, &g, &at).passed);
        let above = QaThresholds {
            delta_lat_max: measured * 1.0001,
            ..loose
        };
        assert!(similarity_gate(&o, &g, &above).passed);
    }

    #[test]
    fn similarity_degenerate_fails_with_note() {
        let o = traj("o", "ego", &[(0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]);
        let r = similarity_gate(&o, &straight("g", "ego", 3, 1.0, 0.0), &QaThresholds::default());
        assert!(!r.passed);
        assert!(r.note.is_some());
    }

    #[test]
    fn collision_cases() {
        let syn = straight("x/ego", "ego", 31, 1.0, 0.0);
        let th = QaThresholds::default();
        assert!(collision_gate(&syn, &scene_with(vec![]), &th).unwrap().passed);

        let same = straight("s/a", "a", 31, 1.0, 0.0);
        let r = collision_gate(&syn, &scene_with(vec![same]), &th).unwrap();
        assert!(!r.passed);
        assert_eq!(r.measured["first_collision_t"], 0.0);

        let parallel = straight("s/b", "b", 31, 1.0, 10.0);
        let scene = scene_with(vec![parallel]);
        assert!(collision_gate(&syn, &scene, &th).unwrap().passed);
        let wide = QaThresholds {
            collision_radius: 11.0,
            ..th
        };
        assert!(!collision_gate(&syn, &scene, &wide).unwrap().passed);
    }

    #[test]
    fn collision_ego_among_agents_is_config_error() {
        let syn = straight("x/ego", "ego", 31, 1.0, 0.0);
        let dup = straight("s/ego2", "ego", 31, 1.0, 30.0);
        let err = collision_gate(&syn, &scene_with(vec![dup]), &QaThresholds::default()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn comfort_cases() {
        let th = QaThresholds::default();
        assert!(comfort_gate(&straight("a", "a", 31, 1.0, 0.0), &th).passed);

        // R = 5 m arc at 5 m/s: curvature 0.2
        let (r, v) = (5.0, 5.0);
        let arc: Vec<_> = (0..31)
            .map(|i| {
                let a = v / r * i as f64 * SAMPLE_PERIOD;
                (r * a.sin(), r * (1.0 - a.cos()))
            })
            .collect();
        let tight = QaThresholds {
            curvature_max: 0.15,
            ..th.clone()
        };
        let rec = comfort_gate(&traj("arc", "a", &arc), &tight);
        assert!(!rec.passed);
        assert!((rec.measured["max_curvature"] - 0.2).abs() < 0.01);

        let creep = straight("c", "c", 31, 0.01, 0.0);
        let rec = comfort_gate(&creep, &th);
        assert!(rec.passed);
        assert!(!rec.measured.contains_key("max_curvature"));
        assert!(rec.measured.contains_key("max_jerk"));
    }

    #[test]
    fn progress_cases() {
        let th = QaThresholds {
            avg_speed_min: 1.0,
            avg_speed_max: 20.0,
            ..QaThresholds::default()
        };
        let r = progress_gate(&straight("a", "a", 31, 1.0, 0.0), &th).unwrap();
        assert!(r.passed);
        assert!((r.measured["avg_speed"] - 10.0).abs() < 1e-9);
        assert!(!progress_gate(&straight("a", "a", 31, 0.01, 0.0), &th).unwrap().passed);
    }

    #[test]
    fn progress_of_scaled_synthetic() {
        use crate::synthesis::{synthesize, SynthesisConfig};
        // 15 m straight guide over 3 s, original chord 30 m: scale 2
        let g = straight("g", "ego", 31, 0.5, 0.0);
        let o = traj("o", "ego", &(0..31).map(|i| (0.0, i as f64)).collect::<Vec<_>>());
        let s = synthesize(&o, &g, "c", &SynthesisConfig::default()).unwrap();
        assert!((s.provenance.transform.scale - 2.0).abs() < 1e-12);
        // oracle: analytic length of the scaled guide over the time span
        let want = 2.0 * 15.0 / 3.0;
        let r = progress_gate(&s.trajectory, &QaThresholds::default()).unwrap();
        assert!((r.measured["avg_speed"] - want).abs() < 1e-9);
    }

    #[test]
    fn run_qa_conjunction_and_completeness() {
        let th = QaThresholds::default();
        let o = straight("s/ego", "ego", 31, 1.0, 0.0);
        let scene = Scene::new("s", "s/ego", vec![o.clone()]).unwrap();
        let rep = run_qa(&o, &o, &o, &scene, &th).unwrap();
        assert!(rep.accepted);
        assert_eq!(rep.gates.len(), 4);

        // blocking agent plus a tight curve: collision and comfort fail together
        let arc: Vec<_> = (0..31)
            .map(|i| {
                let a = i as f64 * 0.1;
                (5.0 * a.sin(), 5.0 * (1.0 - a.cos()))
            })
            .collect();
        let syn = traj("x/ego", "ego", &arc);
        let blocker = traj("s/a", "a", &arc);
        let scene = Scene::new("s", "s/ego", vec![o.clone(), blocker]).unwrap();
        let rep = run_qa(&syn, &o, &o, &scene, &th).unwrap();
        assert!(!rep.accepted);
        assert_eq!(rep.failed(), vec![Gate::Collision, Gate::Comfort]);
        assert_eq!(rep.first_failure(), Some(Gate::Collision));
    }

    #[test]
    fn thresholds_validate() {
        assert!(QaThresholds::default().validate().is_ok());
        let bad = QaThresholds {
            avg_speed_min: 50.0,
            ..QaThresholds::default()
        };
        assert!(bad.validate().is_err());
        let neg = QaThresholds {
            jerk_max: -1.0,
            ..QaThresholds::default()
        };
        assert!(neg.validate().is_err());
    }
}

//! Deterministic maneuver and scene generator used as ground truth in tests
//! and for the bundled sample corpus.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{wrap_angle, Real};
use crate::traj::{derive_kinematics, traj_id_for, Point2, Scene, Trajectory, SAMPLE_PERIOD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManeuverKind {
    TurnLeft,
    TurnRight,
    DecelStop,
    AccelFromStop,
    LaneChangeLeft,
    LaneChangeRight,
    ConstantSpeed,
}

impl ManeuverKind {
    pub const ALL: [ManeuverKind; 7] = [
        ManeuverKind::TurnLeft,
        ManeuverKind::TurnRight,
        ManeuverKind::DecelStop,
        ManeuverKind::AccelFromStop,
        ManeuverKind::LaneChangeLeft,
        ManeuverKind::LaneChangeRight,
        ManeuverKind::ConstantSpeed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ManeuverKind::TurnLeft => "turn-left",
            ManeuverKind::TurnRight => "turn-right",
            ManeuverKind::DecelStop => "decel-stop",
            ManeuverKind::AccelFromStop => "accel-from-stop",
            ManeuverKind::LaneChangeLeft => "lane-change-left",
            ManeuverKind::LaneChangeRight => "lane-change-right",
            ManeuverKind::ConstantSpeed => "constant-speed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManeuverSpec {
    pub kind: ManeuverKind,
    /// Seconds; the trajectory has `round(duration / dt)` samples.
    pub duration: f64,
    /// Cruise speed, m/s.
    pub speed: f64,
    /// Turn radius, m.
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Lateral displacement of a lane change, m.
    #[serde(default = "default_lane_offset")]
    pub lane_offset: f64,
    /// Standard deviation of the positional noise, m.
    #[serde(default)]
    pub noise_std: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_radius() -> f64 {
    20.0
}

fn default_lane_offset() -> f64 {
    3.5
}

impl ManeuverSpec {
    pub fn new(kind: ManeuverKind, duration: f64, speed: f64) -> Self {
        Self {
            kind,
            duration,
            speed,
            radius: default_radius(),
            lane_offset: default_lane_offset(),
            noise_std: 0.0,
            seed: 0,
        }
    }

    pub fn samples(&self) -> usize {
        (self.duration / SAMPLE_PERIOD).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidSpec(format!("{}: {m}", self.kind.name())));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad("duration must be positive");
        }
        if self.samples() < 2 {
            return bad("duration too short for two samples");
        }
        if !(self.speed > 0.0 && self.speed.is_finite()) {
            return bad("speed must be positive");
        }
        if matches!(self.kind, ManeuverKind::TurnLeft | ManeuverKind::TurnRight) && !(self.radius > 0.0) {
            return bad("turn radius must be positive");
        }
        if matches!(self.kind, ManeuverKind::LaneChangeLeft | ManeuverKind::LaneChangeRight)
            && !(self.lane_offset > 0.0)
        {
            return bad("lane offset must be positive");
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return bad("noise_std must be non-negative");
        }
        Ok(())
    }

    /// Noise-free position at time `t` in the maneuver's local frame
    /// (start at the origin, heading along `+x`).
    fn backbone(&self, t: f64, end: f64) -> (f64, f64) {
        let v = self.speed;
        match self.kind {
            ManeuverKind::ConstantSpeed => (v * t, 0.0),
            ManeuverKind::TurnLeft | ManeuverKind::TurnRight => {
                let sign = if self.kind == ManeuverKind::TurnLeft { 1.0 } else { -1.0 };
                let a = v / self.radius * t;
                (self.radius * a.sin(), sign * self.radius * (1.0 - a.cos()))
            }
            ManeuverKind::DecelStop => {
                // cruise for the first third, then brake linearly to rest at `end`
                let t1 = end / 3.0;
                let s = if t <= t1 {
                    v * t
                } else {
                    let u = t - t1;
                    v * t1 + v * u - v * u * u / (2.0 * (end - t1))
                };
                (s, 0.0)
            }
            ManeuverKind::AccelFromStop => {
                // accelerate linearly from rest over two thirds, then cruise
                let ta = 2.0 * end / 3.0;
                let s = if t <= ta {
                    v * t * t / (2.0 * ta)
                } else {
                    v * ta / 2.0 + v * (t - ta)
                };
                (s, 0.0)
            }
            ManeuverKind::LaneChangeLeft | ManeuverKind::LaneChangeRight => {
                let sign = if self.kind == ManeuverKind::LaneChangeLeft { 1.0 } else { -1.0 };
                let tau = t / end;
                let ease = tau * tau * (3.0 - 2.0 * tau);
                (v * t, sign * self.lane_offset * ease)
            }
        }
    }
}

/// Generates one maneuver in its local frame.
///
/// Kinematic fields come from the noise-free backbone; the seeded Gaussian
/// noise perturbs only the recorded positions.
pub fn gen_maneuver<T: Real>(
    spec: &ManeuverSpec,
    traj_id: &str,
    agent_id: &str,
    scene_id: &str,
) -> Result<Trajectory<T>> {
    spec.validate()?;
    let n = spec.samples();
    let end = (n - 1) as f64 * SAMPLE_PERIOD;
    let clean: Vec<(T, T, T)> = (0..n)
        .map(|i| {
            let t = i as f64 * SAMPLE_PERIOD;
            let (x, y) = spec.backbone(t, end);
            (T::lit(t), T::lit(x), T::lit(y))
        })
        .collect();
    let mut wps = derive_kinematics(&clean)?;
    if spec.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_std).expect("validated std");
        for w in &mut wps {
            w.x = w.x + T::lit(normal.sample(&mut rng));
            w.y = w.y + T::lit(normal.sample(&mut rng));
        }
    }
    Trajectory::new(traj_id, agent_id, scene_id, wps)
}

/// Rigid placement of a local-frame trajectory in the scene frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Placement {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Placement {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }

    pub fn apply<T: Real>(&self, traj: &mut Trajectory<T>) {
        let rot = T::lit(self.heading);
        let offset = Point2::new(T::lit(self.x), T::lit(self.y));
        for w in &mut traj.waypoints {
            let p = w.pos().rotate(rot) + offset;
            w.x = p.x;
            w.y = p.y;
            w.heading = wrap_angle(w.heading + rot);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub agent_id: String,
    pub maneuver: ManeuverSpec,
    pub placement: Placement,
}

pub const EGO_AGENT_ID: &str = "ego";

fn mix_seed(seed: u64, index: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Places the ego and the agents on a shared time base starting at `t = 0`.
pub fn gen_scene<T: Real>(
    scene_id: &str,
    ego: &ManeuverSpec,
    ego_placement: Placement,
    agents: &[AgentSpec],
    seed: u64,
) -> Result<Scene<T>> {
    let mut ids = BTreeSet::from([EGO_AGENT_ID]);
    for a in agents {
        if !ids.insert(a.agent_id.as_str()) {
            return Err(Error::InvalidSpec(format!(
                "scene {scene_id}: duplicate agent id {}",
                a.agent_id
            )));
        }
    }
    let build = |agent_id: &str, spec: &ManeuverSpec, place: Placement, k: u64| -> Result<Trajectory<T>> {
        let mut s = spec.clone();
        s.seed = mix_seed(seed ^ spec.seed, k);
        let mut t = gen_maneuver(&s, &traj_id_for(scene_id, agent_id), agent_id, scene_id)?;
        place.apply(&mut t);
        Ok(t)
    };
    let mut trajs = vec![build(EGO_AGENT_ID, ego, ego_placement, 0)?];
    for (k, a) in agents.iter().enumerate() {
        trajs.push(build(&a.agent_id, &a.maneuver, a.placement, k as u64 + 1)?);
    }
    Scene::new(scene_id, traj_id_for(scene_id, EGO_AGENT_ID), trajs)
}

/// One archetype population in a generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchetypeCount {
    pub kind: ManeuverKind,
    pub count: usize,
    pub speed: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_lane_offset")]
    pub lane_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub seed: u64,
    pub duration: f64,
    pub noise_std: f64,
    /// Relative uniform jitter applied to speed, radius and lane offset.
    pub jitter: f64,
    /// Adds a lead vehicle and a trailing vehicle in the adjacent lane.
    pub with_agents: bool,
    pub archetypes: Vec<ArchetypeCount>,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            duration: 3.0,
            noise_std: 0.005,
            jitter: 0.05,
            with_agents: true,
            archetypes: vec![
                ArchetypeCount {
                    kind: ManeuverKind::ConstantSpeed,
                    count: 36,
                    speed: 10.0,
                    radius: default_radius(),
                    lane_offset: default_lane_offset(),
                },
                ArchetypeCount {
                    kind: ManeuverKind::TurnLeft,
                    count: 16,
                    speed: 6.0,
                    radius: 20.0,
                    lane_offset: default_lane_offset(),
                },
                ArchetypeCount {
                    kind: ManeuverKind::DecelStop,
                    count: 8,
                    speed: 8.0,
                    radius: default_radius(),
                    lane_offset: default_lane_offset(),
                },
            ],
        }
    }
}

/// A labelled corpus: scenes plus the archetype of each scene's ego.
pub fn gen_corpus<T: Real>(cfg: &GenConfig) -> Result<Vec<(Scene<T>, ManeuverKind)>> {
    if !(cfg.jitter >= 0.0 && cfg.jitter < 1.0) {
        return Err(Error::Config("gen.jitter must lie in [0, 1)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut jit = |v: f64| v * (1.0 + rng.random_range(-1.0..=1.0) * cfg.jitter);
    let mut out = Vec::new();
    let mut idx = 0usize;
    for arch in &cfg.archetypes {
        for _ in 0..arch.count {
            let scene_id = format!("s{idx:04}");
            let ego = ManeuverSpec {
                kind: arch.kind,
                duration: cfg.duration,
                speed: jit(arch.speed),
                radius: jit(arch.radius),
                lane_offset: jit(arch.lane_offset),
                noise_std: cfg.noise_std,
                seed: idx as u64,
            };
            let lead_speed = jit(arch.speed.max(5.0));
            let agents = if cfg.with_agents {
                vec![
                    AgentSpec {
                        agent_id: "lead".into(),
                        maneuver: ManeuverSpec {
                            noise_std: cfg.noise_std,
                            ..ManeuverSpec::new(ManeuverKind::ConstantSpeed, cfg.duration, lead_speed)
                        },
                        placement: Placement::new(45.0, 0.0, 0.0),
                    },
                    AgentSpec {
                        agent_id: "rear".into(),
                        maneuver: ManeuverSpec {
                            noise_std: cfg.noise_std,
                            ..ManeuverSpec::new(ManeuverKind::ConstantSpeed, cfg.duration, arch.speed)
                        },
                        placement: Placement::new(-30.0, -3.5, 0.0),
                    },
                ]
            } else {
                Vec::new()
            };
            // scenes are spread over the map; all egos approach along +x
            let place = Placement::new(200.0 * (idx % 10) as f64, 200.0 * (idx / 10) as f64, 0.0);
            let mut agents = agents;
            for a in &mut agents {
                a.placement.x += place.x;
                a.placement.y += place.y;
            }
            out.push((gen_scene(&scene_id, &ego, place, &agents, cfg.seed)?, arch.kind));
            idx += 1;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_speed_line() {
        let spec = ManeuverSpec::new(ManeuverKind::ConstantSpeed, 3.0, 10.0);
        let t: Trajectory<f64> = gen_maneuver(&spec, "a", "a", "s").unwrap();
        assert_eq!(t.len(), 30);
        for w in &t.waypoints {
            assert_eq!(w.y, 0.0);
            assert!((w.speed - 10.0).abs() < 1e-9);
        }
    }

    #[test]
    fn left_turn_yaw_rate() {
        let spec = ManeuverSpec {
            radius: 10.0,
            ..ManeuverSpec::new(ManeuverKind::TurnLeft, 3.0, 5.0)
        };
        let t: Trajectory<f64> = gen_maneuver(&spec, "a", "a", "s").unwrap();
        for w in &t.waypoints[1..t.len() - 1] {
            assert!((w.yaw_rate - 0.5).abs() < 0.025, "{}", w.yaw_rate);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let spec = ManeuverSpec {
            noise_std: 0.05,
            seed: 3,
            ..ManeuverSpec::new(ManeuverKind::LaneChangeLeft, 4.0, 12.0)
        };
        let a: Trajectory<f64> = gen_maneuver(&spec, "a", "a", "s").unwrap();
        let b: Trajectory<f64> = gen_maneuver(&spec, "a", "a", "s").unwrap();
        assert_eq!(a, b);
        let other = ManeuverSpec { seed: 4, ..spec };
        let c: Trajectory<f64> = gen_maneuver(&other, "a", "a", "s").unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn every_kind_is_valid() {
        for kind in ManeuverKind::ALL {
            let spec = ManeuverSpec {
                noise_std: 0.02,
                ..ManeuverSpec::new(kind, 3.0, 8.0)
            };
            let t: Trajectory<f64> = gen_maneuver(&spec, "a", "a", "s").unwrap();
            t.validate().unwrap();
            assert!(t.waypoints.iter().all(|w| w.speed >= 0.0));
        }
    }

    #[test]
    fn decel_stop_ends_at_rest() {
        let spec = ManeuverSpec::new(ManeuverKind::DecelStop, 3.0, 9.0);
        let t: Trajectory<f64> = gen_maneuver(&spec, "a", "a", "s").unwrap();
        assert!(t.waypoints[0].speed > 8.5);
        assert!(t.waypoints.last().unwrap().speed < 0.5);
    }

    #[test]
    fn invalid_specs() {
        let zero = ManeuverSpec::new(ManeuverKind::ConstantSpeed, 0.0, 5.0);
        assert!(gen_maneuver::<f64>(&zero, "a", "a", "s").is_err());
        let turn = ManeuverSpec {
            radius: 0.0,
            ..ManeuverSpec::new(ManeuverKind::TurnRight, 3.0, 5.0)
        };
        assert!(gen_maneuver::<f64>(&turn, "a", "a", "s").is_err());
    }

    fn follower(dx: f64) -> AgentSpec {
        AgentSpec {
            agent_id: "lead".into(),
            maneuver: ManeuverSpec::new(ManeuverKind::ConstantSpeed, 3.0, 10.0),
            placement: Placement::new(dx, 0.0, 0.0),
        }
    }

    #[test]
    fn co_moving_lead() {
        let ego = ManeuverSpec::new(ManeuverKind::ConstantSpeed, 3.0, 10.0);
        let scene: Scene<f64> = gen_scene("s", &ego, Placement::default(), &[follower(50.0)], 1).unwrap();
        let lead = scene.others().next().unwrap();
        let min = scene
            .ego()
            .waypoints
            .iter()
            .zip(&lead.waypoints)
            .map(|(a, b)| a.pos().distance(b.pos()))
            .fold(f64::INFINITY, f64::min);
        assert!((min - 50.0).abs() < 1e-9);
    }

    #[test]
    fn crossing_agent_meets_ego_at_frame_15() {
        // ego at 10 m/s reaches x = 15 at t = 1.5; the crosser covers 7.5 m at 5 m/s
        let ego = ManeuverSpec::new(ManeuverKind::ConstantSpeed, 3.0, 10.0);
        let crosser = AgentSpec {
            agent_id: "cross".into(),
            maneuver: ManeuverSpec::new(ManeuverKind::ConstantSpeed, 3.0, 5.0),
            placement: Placement::new(15.0, -7.5, std::f64::consts::FRAC_PI_2),
        };
        let scene: Scene<f64> = gen_scene("s", &ego, Placement::default(), &[crosser], 1).unwrap();
        let c = scene.others().next().unwrap();
        let d = scene.ego().waypoints[15].pos().distance(c.waypoints[15].pos());
        assert!(d < 1.0, "{d}");
    }

    #[test]
    fn ego_only_scene_and_duplicate_ids() {
        let ego = ManeuverSpec::new(ManeuverKind::ConstantSpeed, 3.0, 10.0);
        let scene: Scene<f64> = gen_scene("s", &ego, Placement::default(), &[], 1).unwrap();
        assert_eq!(scene.agent_trajectories.len(), 1);
        let dup = [follower(20.0), follower(40.0)];
        assert!(gen_scene::<f64>("s", &ego, Placement::default(), &dup, 1).is_err());
        let clash = [AgentSpec {
            agent_id: EGO_AGENT_ID.into(),
            ..follower(20.0)
        }];
        assert!(gen_scene::<f64>("s", &ego, Placement::default(), &clash, 1).is_err());
    }

    #[test]
    fn default_corpus() {
        let corpus: Vec<(Scene<f64>, ManeuverKind)> = gen_corpus(&GenConfig::default()).unwrap();
        assert_eq!(corpus.len(), 60);
        assert!(corpus.iter().all(|(s, _)| s.agent_trajectories.len() == 3));
    }
}

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::traj::{traj_id_for, Scene, Trajectory, Waypoint, SAMPLE_PERIOD};

/// Writes `bytes` to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub const DATASET_COLUMNS: [&str; 11] = [
    "scene_id", "agent_id", "frame", "t", "x", "y", "heading", "speed", "accel", "yaw_rate", "is_ego",
];

struct PendingTrajectory {
    scene_id: String,
    agent_id: String,
    is_ego: bool,
    first_line: u64,
    waypoints: Vec<Waypoint<f64>>,
}

fn ingest_err(path: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Ingestion {
        path: path.to_string(),
        line,
        message: message.into(),
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim() {
        "1" | "true" | "True" | "TRUE" => Some(true),
        "0" | "false" | "False" | "FALSE" => Some(false),
        _ => None,
    }
}

/// Parses the dataset CSV. Scenes and agents keep the order of first appearance.
pub fn read_dataset_from<T: Real, R: Read>(reader: R, path: &str) -> Result<Vec<Scene<T>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| ingest_err(path, 1, e.to_string()))?.clone();
    let mut col = [0usize; 11];
    for (slot, name) in col.iter_mut().zip(DATASET_COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| ingest_err(path, 1, format!("missing column `{name}`")))?;
    }

    let mut pending: Vec<PendingTrajectory> = Vec::new();
    let mut index: BTreeMap<(String, String), usize> = BTreeMap::new();
    let period_tol = SAMPLE_PERIOD * 1e-6;

    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            ingest_err(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let field = |i: usize| rec.get(col[i]).unwrap_or("").trim();
        let num = |i: usize| -> Result<f64> {
            let v: f64 = field(i)
                .parse()
                .map_err(|_| ingest_err(path, line, format!("column `{}`: not a number: {:?}", DATASET_COLUMNS[i], field(i))))?;
            if !v.is_finite() {
                return Err(ingest_err(path, line, format!("column `{}` is not finite", DATASET_COLUMNS[i])));
            }
            Ok(v)
        };
        let scene_id = field(0).to_string();
        let agent_id = field(1).to_string();
        if scene_id.is_empty() || agent_id.is_empty() {
            return Err(ingest_err(path, line, "empty scene_id or agent_id"));
        }
        field(2)
            .parse::<u64>()
            .map_err(|_| ingest_err(path, line, format!("column `frame`: not a frame index: {:?}", field(2))))?;
        let is_ego = parse_bool(field(10))
            .ok_or_else(|| ingest_err(path, line, format!("column `is_ego`: not a boolean: {:?}", field(10))))?;
        let w = Waypoint {
            t: num(3)?,
            x: num(4)?,
            y: num(5)?,
            heading: num(6)?,
            speed: num(7)?,
            accel: num(8)?,
            yaw_rate: num(9)?,
        };
        if w.speed < 0.0 {
            return Err(ingest_err(path, line, "negative speed"));
        }

        let key = (scene_id.clone(), agent_id.clone());
        let slot = *index.entry(key).or_insert_with(|| {
            pending.push(PendingTrajectory {
                scene_id,
                agent_id,
                is_ego,
                first_line: line,
                waypoints: Vec::new(),
            });
            pending.len() - 1
        });
        let p = &mut pending[slot];
        if p.is_ego != is_ego {
            return Err(ingest_err(path, line, "is_ego changes within one agent"));
        }
        if let [.., a, b] = p.waypoints.as_slice() {
            let dt = w.t - b.t;
            if dt <= 0.0 {
                return Err(ingest_err(path, line, format!("non-monotone time {} after {}", w.t, b.t)));
            }
            if (dt - (b.t - a.t)).abs() > period_tol || (dt - SAMPLE_PERIOD).abs() > period_tol {
                return Err(ingest_err(path, line, format!("mixed sampling period {dt} s")));
            }
        } else if let Some(b) = p.waypoints.last() {
            let dt = w.t - b.t;
            if dt <= 0.0 {
                return Err(ingest_err(path, line, format!("non-monotone time {} after {}", w.t, b.t)));
            }
            if (dt - SAMPLE_PERIOD).abs() > period_tol {
                return Err(ingest_err(path, line, format!("sampling period {dt} s is not {SAMPLE_PERIOD} s")));
            }
        }
        p.waypoints.push(w);
    }

    let mut scene_order: Vec<String> = Vec::new();
    let mut by_scene: BTreeMap<String, Vec<PendingTrajectory>> = BTreeMap::new();
    for p in pending {
        if !by_scene.contains_key(&p.scene_id) {
            scene_order.push(p.scene_id.clone());
        }
        by_scene.entry(p.scene_id.clone()).or_default().push(p);
    }

    let mut scenes = Vec::with_capacity(scene_order.len());
    for scene_id in scene_order {
        let members = by_scene.remove(&scene_id).unwrap_or_default();
        let first_line = members.iter().map(|p| p.first_line).min().unwrap_or(0);
        let egos: Vec<&PendingTrajectory> = members.iter().filter(|p| p.is_ego).collect();
        if egos.len() != 1 {
            return Err(ingest_err(
                path,
                first_line,
                format!("scene {scene_id} has {} ego agents, expected 1", egos.len()),
            ));
        }
        let ego_id = traj_id_for(&scene_id, &egos[0].agent_id);
        let mut trajs = Vec::with_capacity(members.len());
        for p in members {
            let wps = p
                .waypoints
                .iter()
                .map(|w| Waypoint {
                    t: T::lit(w.t),
                    x: T::lit(w.x),
                    y: T::lit(w.y),
                    heading: T::lit(w.heading),
                    speed: T::lit(w.speed),
                    accel: T::lit(w.accel),
                    yaw_rate: T::lit(w.yaw_rate),
                })
                .collect();
            let t = Trajectory::new(traj_id_for(&scene_id, &p.agent_id), &p.agent_id, &scene_id, wps)
                .map_err(|e| ingest_err(path, p.first_line, e.to_string()))?;
            trajs.push(t);
        }
        let scene = Scene::new(&scene_id, ego_id, trajs).map_err(|e| ingest_err(path, first_line, e.to_string()))?;
        scenes.push(scene);
    }
    Ok(scenes)
}

pub fn read_dataset<T: Real>(path: &Path) -> Result<Vec<Scene<T>>> {
    let name = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| ingest_err(&name, 0, e.to_string()))?;
    read_dataset_from(std::io::BufReader::new(file), &name)
}

/// Serializes scenes in the dataset CSV format; `frame` counts from each trajectory's start.
pub fn dataset_to_bytes<T: Real>(scenes: &[Scene<T>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(DATASET_COLUMNS)?;
    for scene in scenes {
        for traj in &scene.agent_trajectories {
            let ego = if traj.traj_id == scene.ego_traj_id { "1" } else { "0" };
            for (frame, p) in traj.waypoints.iter().enumerate() {
                let f = |v: T| v.to_f64_lossy().to_string();
                w.write_record([
                    scene.scene_id.as_str(),
                    traj.agent_id.as_str(),
                    &frame.to_string(),
                    &f(p.t),
                    &f(p.x),
                    &f(p.y),
                    &f(p.heading),
                    &f(p.speed),
                    &f(p.accel),
                    &f(p.yaw_rate),
                    ego,
                ])?;
            }
        }
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn write_dataset<T: Real>(path: &Path, scenes: &[Scene<T>]) -> Result<()> {
    write_atomic(path, &dataset_to_bytes(scenes)?)
}

/// Serializes `value` as pretty JSON with a trailing newline and writes it atomically.
pub fn write_json<S: Serialize + ?Sized>(path: &Path, value: &S) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<D: DeserializeOwned>(path: &Path) -> Result<D> {
    let bytes = std::fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

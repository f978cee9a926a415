//! Stage orchestration. Every stage writes its artifact under `<out>/stages/`
//! so the CLI can run stages one at a time or all at once.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::{apply_merge_map, kmeans_fit, pca_project, ClusterModel, LabeledPartition, MergeMap, WindowRef};
use crate::config::{RunConfig, WindowConfig};
use crate::embedding::{encode_window, extract_windows, fit_norm_stats, train, Checkpoint, Embedding, FeatureWindow};
use crate::error::{Error, Result};
use crate::io::{dataset_to_bytes, read_dataset, read_json, write_atomic, write_json};
use crate::qa::{run_qa, QaReport};
use crate::rebalance::{census_report, select_augmented, target_counts, ClusterCensus};
use crate::report::{
    census_csv, census_svg, clusters_csv, clusters_svg, rejection_histogram, rejections_csv, ClusterRow, RejectionRow,
};
use crate::synthesis::{enumerate_pairs, rejection_code, synthesize, synthetic_scene_id, CandidatePair, SyntheticTrajectory};
use crate::traj::{traj_id_for, Scene, Trajectory};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const STAGES_DIR: &str = "stages";
pub const FEATURES_FILE: &str = "features.json";
pub const MODEL_FILE: &str = "model.json";
pub const TRAINING_FILE: &str = "training.json";
pub const EMBEDDINGS_FILE: &str = "embeddings.json";
pub const CLUSTERS_FILE: &str = "clusters.json";
pub const CANDIDATES_FILE: &str = "candidates.json";
pub const QA_FILE: &str = "qa.json";
pub const SELECTION_FILE: &str = "selection.json";

pub const AUGMENTED_FILE: &str = "augmented.csv";
pub const PROVENANCE_FILE: &str = "provenance.jsonl";
pub const CENSUS_CSV: &str = "census.csv";
pub const CLUSTERS_CSV: &str = "clusters.csv";
pub const REJECTIONS_CSV: &str = "rejections.csv";
pub const CENSUS_SVG: &str = "census.svg";
pub const CLUSTERS_SVG: &str = "clusters.svg";
pub const STATUS_FILE: &str = "status.json";
/// The only output carrying wall-clock data.
pub const RUN_META_FILE: &str = "run_meta.json";

/// Output directory layout.
#[derive(Debug, Clone)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(root.join(STAGES_DIR))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn stage_path(&self, name: &str) -> PathBuf {
        self.root.join(STAGES_DIR).join(name)
    }

    pub fn save_stage<S: Serialize + ?Sized>(&self, name: &str, value: &S) -> Result<()> {
        write_json(&self.stage_path(name), value)
    }

    pub fn load_stage<D: DeserializeOwned>(&self, name: &str) -> Result<D> {
        let p = self.stage_path(name);
        if !p.is_file() {
            return Err(Error::InvalidInput(format!(
                "missing artifact {}; run the earlier stages first",
                p.display()
            )));
        }
        read_json(&p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureArtifact {
    pub window: WindowConfig,
    /// Raw (unnormalized) windows of every ego trajectory.
    pub windows: Vec<FeatureWindow<f64>>,
    /// Ego trajectories shorter than one window.
    pub unlabeled: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingArtifact {
    pub loss_curve: Vec<f64>,
    pub best_epoch: usize,
    pub initial_loss: f64,
    pub best_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterArtifact {
    pub k_requested: usize,
    pub k_used: usize,
    pub model: ClusterModel<f64>,
    pub merge_map: MergeMap,
    pub partition: LabeledPartition,
    pub windows: Vec<WindowRef>,
    pub projection: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub synthetic_id: String,
    pub pair: CandidatePair,
    pub synthetic: Option<SyntheticTrajectory<f64>>,
    pub error: Option<String>,
    pub error_message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateQa {
    pub synthetic_id: String,
    pub report: Option<QaReport>,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionArtifact {
    pub targets: BTreeMap<String, usize>,
    pub selected: BTreeMap<String, Vec<String>>,
    pub census: ClusterCensus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transform {
    pub theta: f64,
    pub scale: f64,
    pub tx: f64,
    pub ty: f64,
}

/// One line of the provenance log; written for every candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProvenanceRecord {
    pub synthetic_id: String,
    pub original_id: String,
    pub guide_id: String,
    pub cluster_label: String,
    pub transform: Option<Transform>,
    pub synthesis_error: Option<String>,
    pub qa: Option<QaReport>,
    pub accepted: bool,
    pub selected: bool,
    pub config_digest: String,
    pub tool_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenes: usize,
    pub windows: usize,
    pub k_used: usize,
    pub candidates: usize,
    pub accepted: usize,
    pub emitted: usize,
    pub rejections: Vec<RejectionRow>,
}

fn ego_index(scenes: &[Scene<f64>]) -> BTreeMap<&str, (&Scene<f64>, &Trajectory<f64>)> {
    scenes
        .iter()
        .map(|s| {
            let ego = s.ego();
            (ego.traj_id.as_str(), (s, ego))
        })
        .collect()
}

pub fn stage_features(scenes: &[Scene<f64>], window: &WindowConfig) -> Result<FeatureArtifact> {
    let mut windows = Vec::new();
    let mut unlabeled = Vec::new();
    for scene in scenes {
        let ego = scene.ego();
        let w = extract_windows(ego, window.len, window.stride)?;
        if w.is_empty() {
            unlabeled.push(ego.traj_id.clone());
        }
        windows.extend(w);
    }
    if !unlabeled.is_empty() {
        log::warn!("{} ego trajectories shorter than one window stay unlabeled", unlabeled.len());
    }
    Ok(FeatureArtifact {
        window: *window,
        windows,
        unlabeled,
    })
}

pub fn stage_train(features: &FeatureArtifact, cfg: &RunConfig) -> Result<(Checkpoint, TrainingArtifact)> {
    let norm = fit_norm_stats(&features.windows)?;
    let normalized: Vec<_> = features.windows.iter().map(|w| norm.normalize(w)).collect();
    let out = train(&normalized, &cfg.ae)?;
    log::info!(
        "autoencoder: loss {:.6} -> {:.6} (best epoch {})",
        out.initial_loss(),
        out.best_loss(),
        out.best_epoch
    );
    let summary = TrainingArtifact {
        initial_loss: out.initial_loss(),
        best_loss: out.best_loss(),
        best_epoch: out.best_epoch,
        loss_curve: out.loss_curve,
    };
    Ok((Checkpoint::from_model(&out.params, &norm), summary))
}

pub fn stage_embed(features: &FeatureArtifact, model: &Checkpoint) -> Result<Vec<Embedding<f64>>> {
    let (params, norm) = model.clone().into_model::<f64>()?;
    features
        .windows
        .par_iter()
        .map(|w| encode_window(&params, &norm.normalize(w)))
        .collect()
}

pub fn stage_cluster(embeddings: &[Embedding<f64>], cfg: &RunConfig) -> Result<ClusterArtifact> {
    if embeddings.is_empty() {
        return Err(Error::Empty("no embeddings to cluster"));
    }
    let points: Vec<Vec<f64>> = embeddings.iter().map(|e| e.z.clone()).collect();
    let km = cfg.cluster.kmeans(points.len());
    if km.k < cfg.cluster.k {
        log::warn!("cluster.k = {} clamped to {} windows", cfg.cluster.k, km.k);
    }
    let model = kmeans_fit(&points, &km)?;
    let merge_map = cfg.cluster.merge_map(km.k)?;
    let windows: Vec<WindowRef> = embeddings
        .iter()
        .map(|e| WindowRef {
            traj_id: e.traj_id.clone(),
            start_index: e.start_index,
        })
        .collect();
    let partition = apply_merge_map(&windows, &model.labels, &merge_map)?;
    let projection = if points.len() >= 2 {
        pca_project(&points, 2)?.into_iter().map(|p| [p[0], p[1]]).collect()
    } else {
        vec![[0.0, 0.0]; points.len()]
    };
    Ok(ClusterArtifact {
        k_requested: cfg.cluster.k,
        k_used: km.k,
        model,
        merge_map,
        partition,
        windows,
        projection,
    })
}

pub fn stage_synthesize(scenes: &[Scene<f64>], clusters: &ClusterArtifact, cfg: &RunConfig) -> Result<Vec<Candidate>> {
    let egos = ego_index(scenes);
    let mut pairs = Vec::new();
    for (label, members) in &clusters.partition.trajectories_by_label {
        let members: Vec<&String> = members.iter().collect();
        pairs.extend(enumerate_pairs(label, &members));
    }
    pairs
        .into_par_iter()
        .map(|pair| {
            let lookup = |id: &str| {
                egos.get(id)
                    .map(|(_, t)| *t)
                    .ok_or_else(|| Error::InvalidInput(format!("clustered trajectory {id} is not an ego in the dataset")))
            };
            let original = lookup(&pair.original_id)?;
            let guide = lookup(&pair.guide_id)?;
            let synthetic_id = traj_id_for(&synthetic_scene_id(&original.traj_id, &guide.traj_id), &original.agent_id);
            Ok(match synthesize(original, guide, &pair.cluster_label, &cfg.synthesis) {
                Ok(s) => Candidate {
                    synthetic_id,
                    pair,
                    synthetic: Some(s),
                    error: None,
                    error_message: None,
                },
                Err(e) => Candidate {
                    synthetic_id,
                    pair,
                    synthetic: None,
                    error: Some(rejection_code(&e).to_string()),
                    error_message: Some(e.to_string()),
                },
            })
        })
        .collect()
}

pub fn stage_qa(scenes: &[Scene<f64>], candidates: &[Candidate], cfg: &RunConfig) -> Result<Vec<CandidateQa>> {
    let egos = ego_index(scenes);
    candidates
        .par_iter()
        .map(|c| {
            let Some(syn) = &c.synthetic else {
                return Ok(CandidateQa {
                    synthetic_id: c.synthetic_id.clone(),
                    report: None,
                    accepted: false,
                });
            };
            let get = |id: &str| {
                egos.get(id)
                    .copied()
                    .ok_or_else(|| Error::InvalidInput(format!("trajectory {id} is not an ego in the dataset")))
            };
            let (scene, original) = get(&c.pair.original_id)?;
            let (_, guide) = get(&c.pair.guide_id)?;
            let report = run_qa(&syn.trajectory, original, guide, scene, &cfg.qa)?;
            Ok(CandidateQa {
                synthetic_id: c.synthetic_id.clone(),
                accepted: report.accepted,
                report: Some(report),
            })
        })
        .collect()
}

pub fn stage_rebalance(clusters: &ClusterArtifact, candidates: &[Candidate], qa: &[CandidateQa], seed: u64) -> Result<SelectionArtifact> {
    if candidates.len() != qa.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} candidates but {} QA results",
            candidates.len(),
            qa.len()
        )));
    }
    let original: BTreeMap<String, usize> = clusters
        .partition
        .trajectories_by_label
        .iter()
        .map(|(l, m)| (l.clone(), m.len()))
        .collect();
    let mut accepted: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (c, q) in candidates.iter().zip(qa) {
        if q.synthetic_id != c.synthetic_id {
            return Err(Error::ShapeMismatch(format!("QA result {} out of order", q.synthetic_id)));
        }
        if q.accepted {
            accepted.entry(c.pair.cluster_label.clone()).or_default().push(c.synthetic_id.clone());
        }
    }
    let targets = target_counts(&original)?;
    let selected = select_augmented(&accepted, &original, &targets, seed);
    let census = ClusterCensus::build(&original, &accepted, &targets, &selected);
    Ok(SelectionArtifact {
        targets,
        selected,
        census,
    })
}

/// Synthetic scene: the synthetic trajectory as ego plus the original
/// scene's other agents under the new scene id.
fn synthetic_scene(syn: &Trajectory<f64>, original: &Scene<f64>) -> Result<Scene<f64>> {
    let sid = syn.scene_id.clone();
    let mut trajs = vec![syn.clone()];
    for other in original.others() {
        let mut t = other.clone();
        t.traj_id = traj_id_for(&sid, &t.agent_id);
        t.scene_id = sid.clone();
        trajs.push(t);
    }
    Scene::new(sid, syn.traj_id.clone(), trajs)
}

/// Builds the augmented dataset bytes and the provenance log.
pub fn stage_write(
    scenes: &[Scene<f64>],
    candidates: &[Candidate],
    qa: &[CandidateQa],
    selection: &SelectionArtifact,
    digest: &str,
) -> Result<(Vec<u8>, Vec<u8>)> {
    let egos = ego_index(scenes);
    let chosen: BTreeSet<&str> = selection.selected.values().flatten().map(String::as_str).collect();
    let mut augmented: Vec<Scene<f64>> = scenes.to_vec();
    let mut log = Vec::new();
    for (c, q) in candidates.iter().zip(qa) {
        let selected = chosen.contains(c.synthetic_id.as_str());
        if selected {
            let syn = c
                .synthetic
                .as_ref()
                .ok_or_else(|| Error::InvalidInput(format!("selected candidate {} has no trajectory", c.synthetic_id)))?;
            let (scene, _) = egos
                .get(c.pair.original_id.as_str())
                .ok_or_else(|| Error::InvalidInput(format!("unknown original {}", c.pair.original_id)))?;
            augmented.push(synthetic_scene(&syn.trajectory, scene)?);
        }
        let record = ProvenanceRecord {
            synthetic_id: c.synthetic_id.clone(),
            original_id: c.pair.original_id.clone(),
            guide_id: c.pair.guide_id.clone(),
            cluster_label: c.pair.cluster_label.clone(),
            transform: c.synthetic.as_ref().map(|s| {
                let t = &s.provenance.transform;
                Transform {
                    theta: t.theta,
                    scale: t.scale,
                    tx: t.translation.x,
                    ty: t.translation.y,
                }
            }),
            synthesis_error: c.error.clone(),
            qa: q.report.clone(),
            accepted: q.accepted,
            selected,
            config_digest: digest.to_string(),
            tool_version: TOOL_VERSION.to_string(),
        };
        serde_json::to_writer(&mut log, &record)?;
        log.push(b'\n');
    }
    Ok((dataset_to_bytes(&augmented)?, log))
}

/// Writes the CSV and SVG reports from in-memory artifacts.
pub fn emit_reports(
    out: &OutDir,
    clusters: &ClusterArtifact,
    qa: &[CandidateQa],
    selection: &SelectionArtifact,
) -> Result<Vec<RejectionRow>> {
    let freq = census_report(&selection.census);
    write_atomic(&out.path(CENSUS_CSV), &census_csv(&freq)?)?;
    write_atomic(&out.path(CENSUS_SVG), census_svg(&freq).as_bytes())?;

    let rows: Vec<ClusterRow> = clusters
        .windows
        .iter()
        .enumerate()
        .map(|(i, w)| ClusterRow {
            traj_id: w.traj_id.clone(),
            start_index: w.start_index,
            raw_cluster: clusters.model.labels[i],
            label: clusters.partition.window_labels[i].clone(),
            pc1: clusters.projection[i][0],
            pc2: clusters.projection[i][1],
        })
        .collect();
    write_atomic(&out.path(CLUSTERS_CSV), &clusters_csv(&rows)?)?;
    write_atomic(&out.path(CLUSTERS_SVG), clusters_svg(&rows).as_bytes())?;

    let hist = rejection_histogram(qa.iter().map(|q| q.report.as_ref()));
    write_atomic(&out.path(REJECTIONS_CSV), &rejections_csv(&hist)?)?;
    Ok(hist)
}

#[derive(Debug, Serialize)]
struct Status<'a> {
    status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    stage: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn write_status(out: &OutDir, err: Option<&Error>) -> Result<()> {
    let status = match err {
        None => Status {
            status: "ok",
            stage: None,
            error: None,
        },
        Some(e) => Status {
            status: "failed",
            stage: match e {
                Error::Stage { stage, .. } => Some(stage),
                _ => None,
            },
            error: Some(e.to_string()),
        },
    };
    write_json(&out.path(STATUS_FILE), &status)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(std::fs::read(path)?)))
}

fn timed<R>(timings: &mut BTreeMap<&'static str, f64>, stage: &'static str, f: impl FnOnce() -> Result<R>) -> Result<R> {
    let t0 = Instant::now();
    log::info!("stage {stage}");
    let r = f().map_err(|e| e.in_stage(stage));
    timings.insert(stage, t0.elapsed().as_secs_f64());
    r
}

fn run_stages(cfg: &RunConfig, out: &OutDir, timings: &mut BTreeMap<&'static str, f64>) -> Result<RunSummary> {
    let input = cfg.input_path()?.to_path_buf();
    let digest = cfg.digest();
    let scenes: Vec<Scene<f64>> = timed(timings, "ingest", || read_dataset(&input))?;

    let features = timed(timings, "features", || {
        let f = stage_features(&scenes, &cfg.window)?;
        out.save_stage(FEATURES_FILE, &f)?;
        Ok(f)
    })?;
    let model = timed(timings, "train-ae", || {
        let (model, summary) = stage_train(&features, cfg)?;
        model.save(&out.stage_path(MODEL_FILE))?;
        out.save_stage(TRAINING_FILE, &summary)?;
        Ok(model)
    })?;
    let embeddings = timed(timings, "embed", || {
        let e = stage_embed(&features, &model)?;
        out.save_stage(EMBEDDINGS_FILE, &e)?;
        Ok(e)
    })?;
    let clusters = timed(timings, "cluster", || {
        let c = stage_cluster(&embeddings, cfg)?;
        out.save_stage(CLUSTERS_FILE, &c)?;
        Ok(c)
    })?;
    let candidates = timed(timings, "synthesize", || {
        let c = stage_synthesize(&scenes, &clusters, cfg)?;
        out.save_stage(CANDIDATES_FILE, &c)?;
        Ok(c)
    })?;
    let qa = timed(timings, "qa", || {
        let q = stage_qa(&scenes, &candidates, cfg)?;
        out.save_stage(QA_FILE, &q)?;
        Ok(q)
    })?;
    let selection = timed(timings, "rebalance", || {
        let s = stage_rebalance(&clusters, &candidates, &qa, cfg.rebalance.seed)?;
        out.save_stage(SELECTION_FILE, &s)?;
        Ok(s)
    })?;
    timed(timings, "write", || {
        let (dataset, provenance) = stage_write(&scenes, &candidates, &qa, &selection, &digest)?;
        write_atomic(&out.path(AUGMENTED_FILE), &dataset)?;
        write_atomic(&out.path(PROVENANCE_FILE), &provenance)
    })?;
    let rejections = timed(timings, "report", || emit_reports(out, &clusters, &qa, &selection))?;

    Ok(RunSummary {
        scenes: scenes.len(),
        windows: features.windows.len(),
        k_used: clusters.k_used,
        candidates: candidates.len(),
        accepted: qa.iter().filter(|q| q.accepted).count(),
        emitted: selection.census.total_selected(),
        rejections,
    })
}

/// Runs every stage; the outcome is recorded in `status.json` and wall-clock
/// data goes to `run_meta.json` only.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    cfg.input_path()?;
    let out = OutDir::new(&cfg.io.output)?;
    let started = unix_now();
    let mut timings = BTreeMap::new();
    let result = run_stages(cfg, &out, &mut timings);
    write_status(&out, result.as_ref().err())?;
    let meta = serde_json::json!({
        "started_unix": started,
        "finished_unix": unix_now(),
        "stage_seconds": timings,
        "tool_version": TOOL_VERSION,
        "config_digest": cfg.digest(),
        "input_sha256": sha256_file(cfg.input_path()?)?,
        "summary": result.as_ref().ok(),
    });
    write_json(&out.path(RUN_META_FILE), &meta)?;
    result
}

fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

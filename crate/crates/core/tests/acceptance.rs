//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trajaug::clustering::{kmeans_fit, purity, silhouette, KMeansConfig};
use trajaug::embedding::{encode_window, extract_windows, fit_norm_stats, grad, loss, train, AeParams, TrainConfig};
use trajaug::linalg::Mat;
use trajaug::config::RunConfig;
use trajaug::pipeline::{run_pipeline, ProvenanceRecord, AUGMENTED_FILE, PROVENANCE_FILE, REJECTIONS_CSV, RUN_META_FILE};
use trajaug::qa::{collision_gate, similarity_gate, QaThresholds};
use trajaug::rebalance::{census_report, select_augmented, target_counts, ClusterCensus};
use trajaug::scenario::{gen_maneuver, gen_scene, AgentSpec, ManeuverKind, ManeuverSpec, Placement};
use trajaug::synthesis::{enumerate_pairs, fit_endpoint_transform, synthesize, SynthesisConfig};
use trajaug::traj::{resample_polyline, turning_angles, Point2, Scene, Trajectory, SAMPLE_PERIOD};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("runtime {:.1}s exceeds {limit_s}s", elapsed.as_secs_f64())
    })
}

fn random_spec(rng: &mut ChaCha8Rng, kind: ManeuverKind) -> ManeuverSpec {
    ManeuverSpec {
        radius: rng.random_range(12.0..40.0),
        lane_offset: rng.random_range(2.5..4.5),
        noise_std: rng.random_range(0.0..0.05),
        seed: rng.random(),
        ..ManeuverSpec::new(kind, rng.random_range(2.0..6.0), rng.random_range(4.0..15.0))
    }
}

/// A random maneuver of `kind`, rigidly placed somewhere on the map.
fn random_maneuver(rng: &mut ChaCha8Rng, kind: ManeuverKind, id: &str) -> Trajectory<f64> {
    let spec = random_spec(rng, kind);
    let mut t = gen_maneuver(&spec, id, "ego", id).expect("valid spec");
    Placement::new(
        rng.random_range(-500.0..500.0),
        rng.random_range(-500.0..500.0),
        rng.random_range(-PI..PI),
    )
    .apply(&mut t);
    t
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let kind = ManeuverKind::ALL[i % ManeuverKind::ALL.len()];
        let o = random_maneuver(&mut rng, kind, &format!("o{i}"));
        let g = random_maneuver(&mut rng, kind, &format!("g{i}"));
        let s = synthesize(&o, &g, kind.name(), &SynthesisConfig::default())
            .map_err(|e| format!("pair {i} ({}): {e}", kind.name()))?;
        let (so, sn) = (s.trajectory.waypoints.first().unwrap(), s.trajectory.waypoints.last().unwrap());
        let (oo, on) = (o.waypoints.first().unwrap(), o.waypoints.last().unwrap());
        worst = worst.max(so.pos().distance(oo.pos())).max(sn.pos().distance(on.pos()));
    }
    ensure(worst <= 1e-9, || format!("endpoint error {worst:e} m"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!("1000 pairs, max endpoint error {worst:e} m, {:.2}s", start.elapsed().as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let pt = |r: &mut ChaCha8Rng| Point2::new(r.random_range(-300.0..300.0), r.random_range(-300.0..300.0));
    let mut worst = 0.0f64;
    let mut fitted = 0;
    while fitted < 1000 {
        let g: Vec<Point2<f64>> = (0..rng.random_range(2..12)).map(|_| pt(&mut rng)).collect();
        let o: Vec<Point2<f64>> = (0..rng.random_range(2..12)).map(|_| pt(&mut rng)).collect();
        let chord = |v: &[Point2<f64>]| v[0].distance(*v.last().unwrap());
        if chord(&g) < 1.0 || chord(&o) < 1.0 {
            continue;
        }
        let tf = fit_endpoint_transform(&g, &o, 0.5).map_err(|e| e.to_string())?;
        worst = worst
            .max(tf.apply_point(g[0]).distance(o[0]))
            .max(tf.apply_point(*g.last().unwrap()).distance(*o.last().unwrap()));
        fitted += 1;
    }
    ensure(worst <= 1e-9, || format!("endpoint mapping error {worst:e}"))?;

    let guide = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)];
    let orig = [Point2::new(0.0, 0.0), Point2::new(0.0, 2.0)];
    let tf = fit_endpoint_transform(&guide, &orig, 0.5).map_err(|e| e.to_string())?;
    ensure((tf.theta - FRAC_PI_2).abs() <= 1e-12 && (tf.scale - 2.0).abs() <= 1e-12, || {
        format!("hand case gave theta {} scale {}", tf.theta, tf.scale)
    })?;
    Ok(format!("1000 fits, max error {worst:e}; hand case theta = pi/2, s = 2"))
}

fn criterion_3() -> Outcome {
    let smooth = [
        ManeuverKind::TurnLeft,
        ManeuverKind::TurnRight,
        ManeuverKind::LaneChangeLeft,
        ManeuverKind::LaneChangeRight,
        ManeuverKind::ConstantSpeed,
        ManeuverKind::AccelFromStop,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for i in 0..120 {
        let kind = smooth[i % smooth.len()];
        let clean = |r: &mut ChaCha8Rng, id: &str| {
            let spec = ManeuverSpec {
                noise_std: 0.0,
                ..random_spec(r, kind)
            };
            gen_maneuver::<f64>(&spec, id, "ego", id).expect("valid spec")
        };
        let o = clean(&mut rng, "o");
        let g = clean(&mut rng, "g");
        let s = synthesize(&o, &g, "c", &SynthesisConfig::default()).map_err(|e| e.to_string())?;
        let reference = resample_polyline(&s.provenance.transform.apply(&g.positions()), o.len())
            .map_err(|e| e.to_string())?;
        let a = turning_angles(&s.trajectory.positions());
        let b = turning_angles(&reference);
        for (x, y) in a.iter().zip(&b) {
            worst = worst.max((x - y).abs());
        }
        checked += a.len();
    }
    ensure(worst <= 1e-6, || format!("turning-angle deviation {worst:e} rad"))?;
    Ok(format!("120 smooth guides, {checked} angles, max deviation {worst:e} rad"))
}

fn criterion_4() -> Outcome {
    for n in 1..=20usize {
        let members: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
        let pairs = enumerate_pairs("c", &members);
        ensure(pairs.len() == n * (n - 1), || format!("n = {n}: {} pairs", pairs.len()))?;
        let distinct: BTreeSet<(&str, &str)> = pairs.iter().map(|p| (p.original_id.as_str(), p.guide_id.as_str())).collect();
        ensure(distinct.len() == pairs.len(), || format!("n = {n}: duplicate pairs"))?;
        ensure(pairs.iter().all(|p| p.original_id != p.guide_id), || format!("n = {n}: self pair"))?;
    }
    Ok("n = 1..20 all give n(n-1) ordered pairs".into())
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let h = 1e-5;
    let mut worst = 0.0f64;
    let mut params_seen = 0;
    for seed in 0..20u64 {
        let p = AeParams::<f64>::init_uniform(4, 4, 0.5, seed);
        ensure(p.num_params() <= 500, || format!("{} parameters", p.num_params()))?;
        params_seen = p.num_params();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let data: Vec<f64> = (0..4 * 5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let seq = Mat::from_vec(4, 5, data).map_err(|e| e.to_string())?;
        let (_, g) = grad(&p, &seq).map_err(|e| e.to_string())?;
        for ti in 0..10 {
            for k in 0..p.tensors()[ti].len() {
                let mut plus = p.clone();
                plus.tensors_mut()[ti][k] += h;
                let mut minus = p.clone();
                minus.tensors_mut()[ti][k] -= h;
                let num = (loss(&plus, &seq).unwrap() - loss(&minus, &seq).unwrap()) / (2.0 * h);
                let ana = g.tensors()[ti][k];
                let rel = (ana - num).abs() / ana.abs().max(num.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
    }
    ensure(worst <= 1e-4, || format!("max relative error {worst:e}"))?;
    within(start.elapsed(), 30.0)?;
    Ok(format!(
        "20 seeds x {params_seen} parameters, max rel-err {worst:e}, {:.2}s",
        start.elapsed().as_secs_f64()
    ))
}

struct AeFixture {
    embeddings: Vec<Vec<f64>>,
    truth: Vec<usize>,
    initial: f64,
    best: f64,
    elapsed: Duration,
}

fn ae_fixture() -> Result<AeFixture, String> {
    let start = Instant::now();
    let kinds = [ManeuverKind::TurnLeft, ManeuverKind::DecelStop, ManeuverKind::LaneChangeRight];
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut windows = Vec::new();
    let mut truth = Vec::new();
    for (ki, &kind) in kinds.iter().enumerate() {
        for i in 0..20 {
            let spec = ManeuverSpec {
                noise_std: 0.05,
                seed: (ki * 100 + i) as u64,
                radius: rng.random_range(18.0..22.0),
                ..ManeuverSpec::new(kind, 3.0, rng.random_range(7.0..10.0))
            };
            let id = format!("{}-{i}", kind.name());
            let t: Trajectory<f64> = gen_maneuver(&spec, &id, "ego", &id).map_err(|e| e.to_string())?;
            windows.extend(extract_windows(&t, 30, 30).map_err(|e| e.to_string())?);
            truth.push(ki);
        }
    }
    ensure(windows.len() == 60, || format!("{} windows", windows.len()))?;
    let norm = fit_norm_stats(&windows).map_err(|e| e.to_string())?;
    let normalized: Vec<_> = windows.iter().map(|w| norm.normalize(w)).collect();
    let out = train(&normalized, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let embeddings = normalized
        .iter()
        .map(|w| encode_window(&out.params, w).map(|e| e.z))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    Ok(AeFixture {
        embeddings,
        truth,
        initial: out.initial_loss(),
        best: out.best_loss(),
        elapsed: start.elapsed(),
    })
}

fn criterion_6(fx: &AeFixture) -> Outcome {
    let reduction = 1.0 - fx.best / fx.initial;
    let sil = silhouette(&fx.embeddings, &fx.truth).map_err(|e| e.to_string())?;
    ensure(reduction >= 0.9, || format!("MSE reduced by only {:.1}%", 100.0 * reduction))?;
    ensure(sil > 0.0, || format!("silhouette {sil}"))?;
    within(fx.elapsed, 120.0)?;
    Ok(format!(
        "MSE {:.4} -> {:.4} ({:.1}% reduction), silhouette {sil:.3}, {:.1}s",
        fx.initial,
        fx.best,
        100.0 * reduction,
        fx.elapsed.as_secs_f64()
    ))
}

fn criterion_7(fx: &AeFixture) -> Outcome {
    let cfg = KMeansConfig {
        k: 3,
        seed: 0,
        ..KMeansConfig::default()
    };
    let model = kmeans_fit(&fx.embeddings, &cfg).map_err(|e| e.to_string())?;
    let p = purity(&model.labels, &fx.truth).map_err(|e| e.to_string())?;
    ensure(p >= 0.9, || format!("purity {p}"))?;
    for w in model.inertia_history.windows(2) {
        ensure(w[1] <= w[0] * (1.0 + 1e-12), || format!("inertia rose {} -> {}", w[0], w[1]))?;
    }
    Ok(format!(
        "purity {p:.3}, inertia nonincreasing over {} iterations",
        model.inertia_history.len()
    ))
}

fn line_traj(id: &str, pts: &[(f64, f64)]) -> Trajectory<f64> {
    let timed: Vec<_> = pts
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| (i as f64 * SAMPLE_PERIOD, x, y))
        .collect();
    Trajectory::from_timed_points(id, "ego", "s", &timed).expect("valid fixture")
}

fn criterion_8() -> Outcome {
    let th = QaThresholds::default();
    let straight = line_traj("o", &(0..20).map(|i| (i as f64, 0.0)).collect::<Vec<_>>());
    let same = similarity_gate(&straight, &straight, &th);
    let zero = ["delta_lon", "delta_lat", "delta_vel"].iter().all(|k| same.measured.get(*k) == Some(&0.0));
    ensure(zero && same.passed, || format!("identity pair: {:?}", same.measured))?;

    let mut shifted: Vec<(f64, f64)> = vec![(0.0, 0.0), (1.0, 0.0)];
    shifted.extend((2..20).map(|i| (i as f64, 3.0)));
    let guide = line_traj("g", &shifted);
    let rec = similarity_gate(&straight, &guide, &th);
    let lat = rec.measured["delta_lat"];
    ensure(!rec.passed && (lat - 3.0).abs() <= 1e-6, || format!("offset pair: passed {} lat {lat}", rec.passed))?;

    let boundary = QaThresholds {
        delta_lat_max: lat,
        delta_lon_max: 1e6,
        delta_vel_max: 1e6,
        ..th.clone()
    };
    let at = similarity_gate(&straight, &guide, &boundary);
    ensure(!at.passed, || "value equal to the threshold passed".into())?;
    let above = QaThresholds {
        delta_lat_max: lat * (1.0 + 1e-9),
        ..boundary
    };
    ensure(similarity_gate(&straight, &guide, &above).passed, || {
        "value just under the threshold failed".into()
    })?;
    Ok(format!("identity passes with zero deltas; 3 m offset measured {lat} fails; equality fails"))
}

fn criterion_9() -> Outcome {
    let th = QaThresholds::default();
    let ego = ManeuverSpec::new(ManeuverKind::ConstantSpeed, 3.0, 10.0);
    let agent = |id: &str, kind, speed, place| AgentSpec {
        agent_id: id.into(),
        maneuver: ManeuverSpec::new(kind, 3.0, speed),
        placement: place,
    };
    let crossing = agent("cross", ManeuverKind::ConstantSpeed, 5.0, Placement::new(15.0, -7.5, FRAC_PI_2));
    let far = agent("far", ManeuverKind::ConstantSpeed, 10.0, Placement::new(0.0, 40.0, 0.0));
    let lead = agent("lead", ManeuverKind::ConstantSpeed, 10.0, Placement::new(50.0, 0.0, 0.0));

    let scene_a: Scene<f64> =
        gen_scene("x", &ego, Placement::default(), &[far.clone(), crossing.clone(), lead.clone()], 9).map_err(|e| e.to_string())?;
    let rec_a = collision_gate(scene_a.ego(), &scene_a, &th).map_err(|e| e.to_string())?;
    ensure(!rec_a.passed, || "crossing scene accepted".into())?;
    let t_hit = rec_a.measured["first_collision_t"];
    ensure((t_hit - 1.5).abs() < 0.25, || format!("first collision at t = {t_hit}"))?;

    let mut scene_b = scene_a.clone();
    scene_b.agent_trajectories.reverse();
    scene_b.agent_trajectories.rotate_left(1);
    let rec_b = collision_gate(scene_b.ego(), &scene_b, &th).map_err(|e| e.to_string())?;
    ensure(rec_a == rec_b, || "record changed under agent reordering".into())?;

    let co: Scene<f64> = gen_scene("y", &ego, Placement::default(), &[lead], 9).map_err(|e| e.to_string())?;
    let rec_c = collision_gate(co.ego(), &co, &th).map_err(|e| e.to_string())?;
    ensure(rec_c.passed, || format!("co-moving scene rejected: {:?}", rec_c.measured))?;
    Ok(format!(
        "crossing rejected (first hit t = {t_hit}), order-invariant; 50 m co-moving accepted (min {:.1} m)",
        rec_c.measured["min_distance"]
    ))
}

fn criterion_10() -> Outcome {
    let census: BTreeMap<String, usize> = [("A".to_string(), 400), ("B".to_string(), 100)].into();
    let targets = target_counts(&census).map_err(|e| e.to_string())?;
    ensure(targets["A"] == 400 && targets["B"] == 200, || format!("targets {targets:?}"))?;
    let pool: BTreeMap<String, Vec<String>> = [("B".to_string(), (0..500).map(|i| format!("b{i:03}")).collect())].into();
    let sel = select_augmented(&pool, &census, &targets, 0);
    let rows = census_report(&ClusterCensus::build(&census, &pool, &targets, &sel));
    let ratio = rows[0].after_pct / rows[1].after_pct;
    ensure((ratio - 2.0).abs() <= 0.01, || format!("after ratio {ratio}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for trial in 0..100 {
        let n_labels = rng.random_range(1..8);
        let census: BTreeMap<String, usize> = (0..n_labels)
            .map(|i| (format!("c{i}"), rng.random_range(1..300)))
            .collect();
        let targets = target_counts(&census).map_err(|e| e.to_string())?;
        let pool: BTreeMap<String, Vec<String>> = census
            .keys()
            .map(|l| (l.clone(), (0..rng.random_range(0..400)).map(|i| format!("{l}-{i}")).collect()))
            .collect();
        let sel = select_augmented(&pool, &census, &targets, trial);
        for (label, &n) in &census {
            let picked = &sel[label];
            let avail: BTreeSet<&String> = pool[label].iter().collect();
            ensure(targets[label] >= n, || format!("trial {trial}: target below count"))?;
            ensure(picked.iter().all(|id| avail.contains(id)), || format!("trial {trial}: foreign id selected"))?;
            ensure(n + picked.len() <= targets[label], || format!("trial {trial}: overshoot"))?;
            ensure(picked.len() == (targets[label] - n).min(avail.len()), || format!("trial {trial}: count law"))?;
        }
    }
    Ok(format!("{{400, 100}} -> {{400, 200}}, after ratio {ratio:.3}; additive-only holds on 100 censuses"))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn run_cli(out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_trajaug"))
        .arg("pipeline")
        .arg("--config")
        .arg(workspace_root().join("configs/default.toml"))
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!("pipeline exited {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr))
    })
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("readable output dir") {
            let p = entry.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_path_buf();
                out.insert(rel, std::fs::read(&p).expect("readable file"));
            }
        }
    }
    out
}

fn criterion_11(a: &Path, b: &Path) -> Outcome {
    let start = Instant::now();
    run_cli(a)?;
    run_cli(b)?;
    let elapsed = start.elapsed();
    let (ta, tb) = (tree(a), tree(b));
    let names: BTreeSet<&PathBuf> = ta.keys().chain(tb.keys()).collect();
    let mut compared = 0;
    for name in names {
        if name == Path::new(RUN_META_FILE) {
            continue;
        }
        ensure(ta.get(name) == tb.get(name), || format!("{} differs", name.display()))?;
        compared += 1;
    }
    for required in [AUGMENTED_FILE, PROVENANCE_FILE, "census.csv"] {
        ensure(ta.contains_key(Path::new(required)), || format!("{required} missing"))?;
    }
    within(elapsed / 2, 300.0)?;
    Ok(format!(
        "{compared} files byte-identical across two runs, {:.1}s per run",
        elapsed.as_secs_f64() / 2.0
    ))
}

fn criterion_12(outs: &[&Path]) -> Outcome {
    let mut totals = (0usize, 0usize, 0usize);
    let mut rejected_total = 0usize;
    for out in outs {
        let text = std::fs::read_to_string(out.join(PROVENANCE_FILE)).map_err(|e| e.to_string())?;
        let records: Vec<ProvenanceRecord> = text
            .lines()
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        let accepted = records.iter().filter(|r| r.accepted).count();
        for r in &records {
            ensure(r.accepted == r.qa.as_ref().is_some_and(|q| q.accepted), || {
                format!("{}: accepted flag disagrees with QA", r.synthetic_id)
            })?;
        }

        let mut rdr = csv::Reader::from_path(out.join(REJECTIONS_CSV)).map_err(|e| e.to_string())?;
        let mut rejected = 0usize;
        for row in rdr.records() {
            let row = row.map_err(|e| e.to_string())?;
            rejected += row[1].parse::<usize>().map_err(|e| e.to_string())?;
        }
        ensure(records.len() == accepted + rejected, || {
            format!("{} candidates != {accepted} accepted + {rejected} rejected", records.len())
        })?;

        let by_id: BTreeMap<&str, Vec<&ProvenanceRecord>> = records.iter().fold(BTreeMap::new(), |mut m, r| {
            m.entry(r.synthetic_id.as_str()).or_insert_with(Vec::new).push(r);
            m
        });
        let scenes: Vec<Scene<f64>> = trajaug::io::read_dataset(&out.join(AUGMENTED_FILE)).map_err(|e| e.to_string())?;
        let mut emitted = 0;
        for s in scenes.iter().filter(|s| s.scene_id.contains('~')) {
            let id = s.ego_traj_id.as_str();
            let recs = by_id.get(id).map(Vec::as_slice).unwrap_or(&[]);
            ensure(recs.len() == 1 && recs[0].accepted && recs[0].selected, || {
                format!("emitted {id} has {} records", recs.len())
            })?;
            emitted += 1;
        }
        let selected = records.iter().filter(|r| r.selected).count();
        ensure(emitted == selected, || format!("{emitted} emitted vs {selected} selected records"))?;
        totals = (totals.0 + records.len(), totals.1 + accepted, totals.2 + emitted);
        rejected_total += rejected;
    }
    Ok(format!(
        "{} runs: {} candidates = {} accepted + {rejected_total} rejected, {} emitted, all conserved",
        outs.len(),
        totals.0,
        totals.1,
        totals.2
    ))
}

/// A run with tight gates and a long chord guard so every rejection path is taken.
fn strict_run(out: &Path) -> Result<(), String> {
    let mut cfg = RunConfig::load(&workspace_root().join("configs/default.toml")).map_err(|e| e.to_string())?;
    cfg.io.output = out.to_path_buf();
    cfg.ae.epochs = 40;
    cfg.synthesis.min_chord = 20.0;
    cfg.qa.delta_lon_max = 0.6;
    cfg.qa.delta_lat_max = 0.3;
    cfg.qa.collision_radius = 30.5;
    cfg.qa.jerk_max = 0.5;
    let summary = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    ensure(summary.accepted < summary.candidates, || "strict run rejected nothing".into())
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let (a, b) = (dir.path().join("run-a"), dir.path().join("run-b"));
    let strict = dir.path().join("run-strict");
    let fixture = ae_fixture();

    let results: Vec<(usize, &str, Outcome)> = vec![
        (1, "endpoint exactness", criterion_1()),
        (2, "transform correctness", criterion_2()),
        (3, "shape preservation", criterion_3()),
        (4, "pair-count law", criterion_4()),
        (5, "gradient check", criterion_5()),
        (6, "AE training sanity", fixture.as_ref().map_err(Clone::clone).and_then(criterion_6)),
        (7, "clustering recovery", fixture.as_ref().map_err(Clone::clone).and_then(criterion_7)),
        (8, "similarity gate semantics", criterion_8()),
        (9, "collision gate", criterion_9()),
        (10, "sqrt rebalancing", criterion_10()),
        (11, "end-to-end reproducibility", criterion_11(&a, &b)),
        (
            12,
            "conservation law",
            strict_run(&strict).and_then(|_| criterion_12(&[a.as_path(), b.as_path(), strict.as_path()])),
        ),
    ];

    let mut failed = 0;
    for (n, name, outcome) in &results {
        match outcome {
            Ok(msg) => println!("criterion {n:>2} [{name}]: PASS ({msg})"),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2} [{name}]: FAIL ({msg})");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

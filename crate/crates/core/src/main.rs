use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use trajaug::config::RunConfig;
use trajaug::embedding::{Checkpoint, Embedding};
use trajaug::io::{read_dataset, write_atomic, write_dataset};
use trajaug::pipeline::*;
use trajaug::scenario::gen_corpus;
use trajaug::traj::Scene;
use trajaug::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "trajaug", version, about = "Cluster-guided trajectory augmentation")]
struct Cli {
    /// Run configuration (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `io.output`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Input dataset CSV; overrides `io.input`.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Overrides every seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic maneuver corpus (`corpus.csv`, `corpus_labels.csv`).
    Gen,
    /// Extract feature windows from the ego trajectories.
    Features,
    /// Train the sequence autoencoder on the feature windows.
    TrainAe,
    /// Encode every window with the trained model.
    Embed,
    /// Cluster embeddings and apply the merge map.
    Cluster,
    /// Synthesize candidates from within-cluster pairs.
    Synthesize,
    /// Run the quality gates on every candidate.
    Qa,
    /// Select accepted candidates toward sqrt targets; write the dataset and provenance.
    Rebalance,
    /// Emit census, cluster and rejection reports.
    Report,
    /// Run every stage in order.
    Pipeline,
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.io.output = out.clone();
    }
    if let Some(input) = &cli.input {
        cfg.io.input = Some(input.clone());
    }
    if let Some(seed) = cli.seed {
        cfg.apply_seed(seed);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn scenes(cfg: &RunConfig) -> Result<Vec<Scene<f64>>> {
    read_dataset(cfg.input_path()?)
}

fn staged<R>(stage: &'static str, f: impl FnOnce() -> Result<R>) -> Result<R> {
    f().map_err(|e| match e {
        Error::Config(_) | Error::Ingestion { .. } => e,
        other => Error::Stage {
            stage,
            source: Box::new(other),
        },
    })
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = load_config(cli)?;
    let out = OutDir::new(&cfg.io.output)?;
    match cli.command {
        Command::Gen => staged("gen", || {
            let corpus = gen_corpus::<f64>(&cfg.gen)?;
            let mut labels = String::from("scene_id,archetype\n");
            for (s, kind) in &corpus {
                labels.push_str(&format!("{},{}\n", s.scene_id, kind.name()));
            }
            let scenes: Vec<Scene<f64>> = corpus.into_iter().map(|(s, _)| s).collect();
            write_dataset(&out.path("corpus.csv"), &scenes)?;
            write_atomic(&out.path("corpus_labels.csv"), labels.as_bytes())?;
            log::info!("wrote {} scenes", scenes.len());
            Ok(())
        }),
        Command::Features => {
            let scenes = scenes(&cfg)?;
            staged("features", || out.save_stage(FEATURES_FILE, &stage_features(&scenes, &cfg.window)?))
        }
        Command::TrainAe => staged("train-ae", || {
            let features: FeatureArtifact = out.load_stage(FEATURES_FILE)?;
            let (model, summary) = stage_train(&features, &cfg)?;
            model.save(&out.stage_path(MODEL_FILE))?;
            out.save_stage(TRAINING_FILE, &summary)
        }),
        Command::Embed => staged("embed", || {
            let features: FeatureArtifact = out.load_stage(FEATURES_FILE)?;
            let model = Checkpoint::load(&out.stage_path(MODEL_FILE))?;
            out.save_stage(EMBEDDINGS_FILE, &stage_embed(&features, &model)?)
        }),
        Command::Cluster => staged("cluster", || {
            let embeddings: Vec<Embedding<f64>> = out.load_stage(EMBEDDINGS_FILE)?;
            out.save_stage(CLUSTERS_FILE, &stage_cluster(&embeddings, &cfg)?)
        }),
        Command::Synthesize => {
            let scenes = scenes(&cfg)?;
            staged("synthesize", || {
                let clusters: ClusterArtifact = out.load_stage(CLUSTERS_FILE)?;
                out.save_stage(CANDIDATES_FILE, &stage_synthesize(&scenes, &clusters, &cfg)?)
            })
        }
        Command::Qa => {
            let scenes = scenes(&cfg)?;
            staged("qa", || {
                let candidates: Vec<Candidate> = out.load_stage(CANDIDATES_FILE)?;
                out.save_stage(QA_FILE, &stage_qa(&scenes, &candidates, &cfg)?)
            })
        }
        Command::Rebalance => {
            let scenes = scenes(&cfg)?;
            staged("rebalance", || {
                let clusters: ClusterArtifact = out.load_stage(CLUSTERS_FILE)?;
                let candidates: Vec<Candidate> = out.load_stage(CANDIDATES_FILE)?;
                let qa: Vec<CandidateQa> = out.load_stage(QA_FILE)?;
                let selection = stage_rebalance(&clusters, &candidates, &qa, cfg.rebalance.seed)?;
                out.save_stage(SELECTION_FILE, &selection)?;
                let (dataset, provenance) = stage_write(&scenes, &candidates, &qa, &selection, &cfg.digest())?;
                write_atomic(&out.path(AUGMENTED_FILE), &dataset)?;
                write_atomic(&out.path(PROVENANCE_FILE), &provenance)
            })
        }
        Command::Report => staged("report", || {
            let clusters: ClusterArtifact = out.load_stage(CLUSTERS_FILE)?;
            let qa: Vec<CandidateQa> = out.load_stage(QA_FILE)?;
            let selection: SelectionArtifact = out.load_stage(SELECTION_FILE)?;
            emit_reports(&out, &clusters, &qa, &selection).map(|_| ())
        }),
        Command::Pipeline => {
            let s = run_pipeline(&cfg)?;
            println!(
                "scenes {} windows {} k {} candidates {} accepted {} emitted {}",
                s.scenes, s.windows, s.k_used, s.candidates, s.accepted, s.emitted
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "debug" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Run configuration: one TOML document, fully validated before any stage runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clustering::{KMeansConfig, MergeMap};
use crate::embedding::{TrainConfig, DEFAULT_WINDOW};
use crate::error::{Error, Result};
use crate::qa::QaThresholds;
use crate::scenario::GenConfig;
use crate::synthesis::SynthesisConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoConfig {
    /// Input dataset CSV.
    pub input: Option<PathBuf>,
    /// Output directory for artifacts.
    pub output: PathBuf,
}

impl Default for IoConfig {
    fn default() -> Self {
        Self {
            input: None,
            output: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    #[serde(alias = "T")]
    pub len: usize,
    pub stride: usize,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            len: DEFAULT_WINDOW,
            stride: DEFAULT_WINDOW,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
    /// Raw cluster id (as a string key) to merged label; identity when absent.
    pub merge_map: Option<BTreeMap<String, String>>,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        let km = KMeansConfig::default();
        Self {
            k: km.k,
            seed: km.seed,
            max_iter: km.max_iter,
            tol: km.tol,
            merge_map: None,
        }
    }
}

impl ClusterConfig {
    /// k-means settings with `k` clamped to the number of points.
    pub fn kmeans(&self, n_points: usize) -> KMeansConfig {
        KMeansConfig {
            k: self.k.min(n_points).max(1),
            seed: self.seed,
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }

    pub fn merge_map(&self, k: usize) -> Result<MergeMap> {
        let map = match &self.merge_map {
            Some(m) => MergeMap::from_string_keys(m)?,
            None => MergeMap::identity(k),
        };
        map.validate(k)?;
        Ok(map)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RebalanceConfig {
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub io: IoConfig,
    pub window: WindowConfig,
    pub ae: TrainConfig,
    pub cluster: ClusterConfig,
    pub synthesis: SynthesisConfig,
    pub qa: QaThresholds,
    pub rebalance: RebalanceConfig,
    pub gen: GenConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths inside it resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(input) = &cfg.io.input {
            if input.is_relative() {
                cfg.io.input = Some(base.join(input));
            }
        }
        if cfg.io.output.is_relative() {
            cfg.io.output = base.join(&cfg.io.output);
        }
        Ok(cfg)
    }

    /// Overrides every seed in the document.
    pub fn apply_seed(&mut self, seed: u64) {
        self.ae.seed = seed;
        self.cluster.seed = seed;
        self.rebalance.seed = seed;
        self.gen.seed = seed;
    }

    /// Numeric and structural checks; does not touch the file system.
    pub fn validate(&self) -> Result<()> {
        if self.window.len < 2 {
            return Err(Error::Config("window.len must be at least 2".into()));
        }
        if self.window.stride == 0 {
            return Err(Error::Config("window.stride must be at least 1".into()));
        }
        self.ae.validate()?;
        if self.cluster.k == 0 || self.cluster.max_iter == 0 {
            return Err(Error::Config("cluster.k and cluster.max_iter must be positive".into()));
        }
        if !(self.cluster.tol >= 0.0 && self.cluster.tol.is_finite()) {
            return Err(Error::Config("cluster.tol must be non-negative".into()));
        }
        if self.cluster.merge_map.is_some() {
            self.cluster.merge_map(self.cluster.k)?;
        }
        if !(self.synthesis.min_chord > 0.0 && self.synthesis.min_chord.is_finite()) {
            return Err(Error::Config("synthesis.min_chord must be positive".into()));
        }
        self.qa.validate()?;
        Ok(())
    }

    /// The input dataset path, checked to exist.
    pub fn input_path(&self) -> Result<&Path> {
        let p = self
            .io
            .input
            .as_deref()
            .ok_or_else(|| Error::Config("io.input is not set".into()))?;
        if !p.is_file() {
            return Err(Error::Config(format!("io.input {} does not exist", p.display())));
        }
        Ok(p)
    }

    /// SHA-256 over the canonical JSON of every setting except file paths.
    pub fn digest(&self) -> String {
        let mut c = self.clone();
        c.io = IoConfig::default();
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

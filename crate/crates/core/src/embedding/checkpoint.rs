//! Model checkpoint file.
//!
//! JSON document:
//!
//! ```text
//! {
//!   "format": "trajaug-ae",
//!   "version": 1,
//!   "hidden_dim": H,
//!   "features": F,
//!   "tensors": [ { "name": "encoder.w_in", "rows": 4H, "cols": F, "data": [...] }, ... ],
//!   "norm": { "mean": [4 values], "std": [4 values] }
//! }
//! ```
//!
//! Tensors appear in the order of [`TENSOR_NAMES`]; matrices are row-major,
//! vectors have `cols = 1`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

use super::features::NormStats;
use super::lstm::{AeParams, TENSOR_NAMES};

pub const CHECKPOINT_FORMAT: &str = "trajaug-ae";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub hidden_dim: usize,
    pub features: usize,
    pub tensors: Vec<TensorRecord>,
    pub norm: NormStats<f64>,
}

impl Checkpoint {
    pub fn from_model<T: Real>(params: &AeParams<T>, norm: &NormStats<T>) -> Self {
        let tensors = TENSOR_NAMES
            .iter()
            .zip(params.tensors())
            .zip(params.tensor_shapes())
            .map(|((name, t), (rows, cols))| TensorRecord {
                name: (*name).to_string(),
                rows,
                cols,
                data: t.iter().map(|v| v.to_f64_lossy()).collect(),
            })
            .collect();
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            hidden_dim: params.hidden_dim,
            features: params.features,
            tensors,
            norm: NormStats {
                mean: norm.mean.map(|v| v.to_f64_lossy()),
                std: norm.std.map(|v| v.to_f64_lossy()),
            },
        }
    }

    pub fn into_model<T: Real>(self) -> Result<(AeParams<T>, NormStats<T>)> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidInput(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        let mut params = AeParams::<T>::zeros(self.hidden_dim, self.features);
        if self.tensors.len() != TENSOR_NAMES.len() {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint has {} tensors, expected {}",
                self.tensors.len(),
                TENSOR_NAMES.len()
            )));
        }
        let shapes = params.tensor_shapes();
        for (((rec, dst), want_name), (rows, cols)) in self
            .tensors
            .iter()
            .zip(params.tensors_mut())
            .zip(TENSOR_NAMES)
            .zip(shapes)
        {
            if rec.name != want_name || rec.rows != rows || rec.cols != cols || rec.data.len() != dst.len() {
                return Err(Error::ShapeMismatch(format!(
                    "checkpoint tensor {} ({}x{}) does not match {want_name} ({rows}x{cols})",
                    rec.name, rec.rows, rec.cols
                )));
            }
            for (d, s) in dst.iter_mut().zip(&rec.data) {
                *d = T::lit(*s);
            }
        }
        if !params.is_finite() {
            return Err(Error::InvalidInput("checkpoint contains non-finite weights".into()));
        }
        let norm = NormStats {
            mean: self.norm.mean.map(T::lit),
            std: self.norm.std.map(T::lit),
        };
        Ok((params, norm))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, serde_json::to_string_pretty(self)?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::num::{unwrap_angles, Real};
use crate::traj::Trajectory;

/// Rows of a feature window, in order.
pub const FEATURE_NAMES: [&str; 4] = ["speed", "accel", "heading", "yaw_rate"];
pub const NUM_FEATURES: usize = FEATURE_NAMES.len();

/// 3 s at 10 Hz.
pub const DEFAULT_WINDOW: usize = 30;

/// A `4 x T` slice of one trajectory's kinematics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureWindow<T> {
    pub traj_id: String,
    pub start_index: usize,
    pub data: Mat<T>,
}

impl<T: Real> FeatureWindow<T> {
    pub fn new(traj_id: impl Into<String>, start_index: usize, data: Mat<T>) -> Result<Self> {
        if data.rows() != NUM_FEATURES {
            return Err(Error::ShapeMismatch(format!(
                "feature window needs {NUM_FEATURES} rows, got {}",
                data.rows()
            )));
        }
        if !data.is_finite() {
            return Err(Error::InvalidInput("non-finite feature value".into()));
        }
        Ok(Self {
            traj_id: traj_id.into(),
            start_index,
            data,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.cols()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.cols() == 0
    }
}

/// Cuts windows of `len` samples every `stride` samples.
///
/// Heading is unwrapped inside each window so a window never contains a
/// `2 pi` jump.
pub fn extract_windows<T: Real>(
    traj: &Trajectory<T>,
    len: usize,
    stride: usize,
) -> Result<Vec<FeatureWindow<T>>> {
    if len < 2 || stride < 1 {
        return Err(Error::InvalidInput(format!(
            "window length must be >= 2 and stride >= 1 (got {len}, {stride})"
        )));
    }
    let n = traj.len();
    if n < len {
        return Ok(Vec::new());
    }
    let mut out = Vec::with_capacity((n - len) / stride + 1);
    let mut start = 0;
    while start + len <= n {
        let wps = &traj.waypoints[start..start + len];
        let heading = unwrap_angles(&wps.iter().map(|w| w.heading).collect::<Vec<_>>());
        let mut data = Mat::zeros(NUM_FEATURES, len);
        for (c, w) in wps.iter().enumerate() {
            data.set(0, c, w.speed);
            data.set(1, c, w.accel);
            data.set(2, c, heading[c]);
            data.set(3, c, w.yaw_rate);
        }
        out.push(FeatureWindow::new(traj.traj_id.clone(), start, data)?);
        start += stride;
    }
    Ok(out)
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats<T> {
    pub mean: [T; NUM_FEATURES],
    pub std: [T; NUM_FEATURES],
}

pub const STD_FLOOR: f64 = 1e-8;

pub fn fit_norm_stats<T: Real>(windows: &[FeatureWindow<T>]) -> Result<NormStats<T>> {
    if windows.is_empty() {
        return Err(Error::Empty("no windows to fit normalization on"));
    }
    let mut mean = [T::zero(); NUM_FEATURES];
    let mut std = [T::zero(); NUM_FEATURES];
    for f in 0..NUM_FEATURES {
        let values = || windows.iter().flat_map(|w| w.data.row(f).iter().copied());
        let count = T::from_usize_lossy(values().count());
        let m = values().sum::<T>() / count;
        let var = values().map(|v| (v - m) * (v - m)).sum::<T>() / count;
        mean[f] = m;
        std[f] = var.sqrt().max(T::lit(STD_FLOOR));
    }
    Ok(NormStats { mean, std })
}

impl<T: Real> NormStats<T> {
    pub fn normalize(&self, window: &FeatureWindow<T>) -> FeatureWindow<T> {
        self.map(window, |v, m, s| (v - m) / s)
    }

    pub fn denormalize(&self, window: &FeatureWindow<T>) -> FeatureWindow<T> {
        self.map(window, |v, m, s| v * s + m)
    }

    fn map(&self, window: &FeatureWindow<T>, op: impl Fn(T, T, T) -> T) -> FeatureWindow<T> {
        let mut data = window.data.clone();
        let cols = data.cols();
        for f in 0..NUM_FEATURES {
            for c in 0..cols {
                data.set(f, c, op(data.get(f, c), self.mean[f], self.std[f]));
            }
        }
        FeatureWindow {
            traj_id: window.traj_id.clone(),
            start_index: window.start_index,
            data,
        }
    }
}

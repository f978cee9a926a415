use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::num::Real;

use super::features::FeatureWindow;
use super::lstm::{grad, loss, AeParams, DEFAULT_HIDDEN};

/// Half-width of the uniform weight initialization.
pub const INIT_SCALE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: DEFAULT_HIDDEN,
            epochs: 200,
            batch_size: 1,
            learning_rate: 1e-2,
            momentum: 0.9,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config(
                "ae.hidden_dim, ae.epochs and ae.batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("ae.learning_rate must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("ae.momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome<T> {
    /// Parameters with the lowest full-dataset loss seen (initialization included).
    pub params: AeParams<T>,
    /// Mean loss over the dataset: entry 0 at initialization, entry `e` after epoch `e`.
    pub loss_curve: Vec<T>,
    pub best_epoch: usize,
}

impl<T: Real> TrainOutcome<T> {
    pub fn initial_loss(&self) -> T {
        self.loss_curve[0]
    }

    pub fn best_loss(&self) -> T {
        self.loss_curve[self.best_epoch]
    }
}

fn mean_loss<T: Real>(params: &AeParams<T>, data: &[&Mat<T>]) -> Result<T> {
    let losses = data
        .par_iter()
        .map(|seq| loss(params, seq))
        .collect::<Result<Vec<T>>>()?;
    Ok(losses.into_iter().sum::<T>() / T::from_usize_lossy(data.len()))
}

/// Minibatch SGD with momentum.
///
/// Deterministic for a given seed: initialization and per-epoch shuffles
/// come from one seeded generator, and per-window gradients inside a
/// minibatch are summed in batch order.
pub fn train<T: Real>(windows: &[FeatureWindow<T>], config: &TrainConfig) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if windows.is_empty() {
        return Err(Error::Empty("no windows to train on"));
    }
    let features = windows[0].data.rows();
    if let Some(w) = windows.iter().find(|w| w.data.rows() != features) {
        return Err(Error::ShapeMismatch(format!(
            "window {}@{} has {} rows, expected {features}",
            w.traj_id,
            w.start_index,
            w.data.rows()
        )));
    }
    let data: Vec<&Mat<T>> = windows.iter().map(|w| &w.data).collect();

    let mut params = AeParams::<T>::init_uniform(config.hidden_dim, features, INIT_SCALE, config.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let mut velocity = AeParams::<T>::zeros(config.hidden_dim, features);
    let lr = T::lit(config.learning_rate);
    let mu = T::lit(config.momentum);

    let initial = mean_loss(&params, &data)?;
    if !initial.is_finite() {
        return Err(Error::TrainingDiverged { epoch: 0 });
    }
    let mut curve = vec![initial];
    let mut best = (initial, 0, params.clone());
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let grads = batch
                .par_iter()
                .map(|&i| grad(&params, data[i]).map(|(_, g)| g))
                .collect::<Result<Vec<_>>>()?;
            let mut total = AeParams::zeros(config.hidden_dim, features);
            for g in &grads {
                total.add_scaled(g, T::one());
            }
            total.scale(T::one() / T::from_usize_lossy(batch.len()));
            velocity.scale(mu);
            velocity.add_scaled(&total, -lr);
            params.add_scaled(&velocity, T::one());
        }
        let epoch_loss = mean_loss(&params, &data)?;
        if !epoch_loss.is_finite() || !params.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        log::debug!("epoch {epoch}: loss {epoch_loss}");
        curve.push(epoch_loss);
        if epoch_loss < best.0 {
            best = (epoch_loss, epoch, params.clone());
        }
    }

    Ok(TrainOutcome {
        params: best.2,
        loss_curve: curve,
        best_epoch: best.1,
    })
}

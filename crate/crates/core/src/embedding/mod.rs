//! Feature windows and the recurrent autoencoder that embeds them.

mod checkpoint;
mod features;
mod lstm;
mod train;

pub use checkpoint::{Checkpoint, TensorRecord, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};
pub use features::{
    extract_windows, fit_norm_stats, FeatureWindow, NormStats, DEFAULT_WINDOW, FEATURE_NAMES,
    NUM_FEATURES, STD_FLOOR,
};
pub use lstm::{
    decode, encode, encode_window, grad, grad_weighted, loss, reconstruction_loss, AeParams,
    Embedding, LstmCell, DEFAULT_HIDDEN, TENSOR_NAMES,
};
pub use train::{train, TrainConfig, TrainOutcome, INIT_SCALE};

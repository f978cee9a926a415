#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod config;
pub mod embedding;
pub mod error;
pub mod frenet;
pub mod io;
pub mod linalg;
pub mod num;
pub mod pipeline;
pub mod qa;
pub mod rebalance;
pub mod report;
pub mod scenario;
pub mod synthesis;
pub mod traj;

pub use error::{Error, Result};
pub use num::Real;

/// Double-precision aliases for the common case.
pub type Trajectory = traj::Trajectory<f64>;
pub type Waypoint = traj::Waypoint<f64>;
pub type Scene = traj::Scene<f64>;
pub type Point2 = traj::Point2<f64>;
pub type FeatureWindow = embedding::FeatureWindow<f64>;
pub type NormStats = embedding::NormStats<f64>;
pub type AeParams = embedding::AeParams<f64>;
pub type Embedding = embedding::Embedding<f64>;
pub type ClusterModel = clustering::ClusterModel<f64>;
pub type SimilarityTransform = synthesis::SimilarityTransform<f64>;
pub type SyntheticTrajectory = synthesis::SyntheticTrajectory<f64>;

pub type TrajectoryF32 = traj::Trajectory<f32>;
pub type AeParamsF32 = embedding::AeParams<f32>;
pub type ClusterModelF32 = clustering::ClusterModel<f32>;

//! K-means over embeddings, merge-map consolidation, and PCA projection.

mod kmeans;
mod merge;
mod metrics;
mod pca;

pub use kmeans::{kmeans_fit, ClusterModel, KMeansConfig};
pub use merge::{apply_merge_map, LabeledPartition, MergeMap, WindowRef};
pub use metrics::{purity, silhouette};
pub use pca::pca_project;

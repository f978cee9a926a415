use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 12,
            seed: 0,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel<T> {
    pub k: usize,
    pub centroids: Vec<Vec<T>>,
    /// Cluster id of every fitted point, in input order.
    pub labels: Vec<usize>,
    /// Total within-cluster squared distance of the final partition.
    pub inertia: T,
    /// Inertia after the assignment step of every Lloyd iteration.
    pub inertia_history: Vec<T>,
    pub iterations: usize,
}

#[inline]
fn sq_dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest id.
fn nearest<T: Real>(centroids: &[Vec<T>], p: &[T]) -> (usize, T) {
    let mut best = (0, sq_dist(&centroids[0], p));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = sq_dist(c, p);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn kmeans_pp<T: Real>(points: &[Vec<T>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let n = points.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<T> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: T = d2.iter().copied().sum();
        let pick = if total > T::zero() {
            let r = T::lit(rng.random::<f64>()) * total;
            let mut acc = T::zero();
            let mut pick = None;
            for (i, &d) in d2.iter().enumerate() {
                acc = acc + d;
                if d > T::zero() && acc > r {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| d2.iter().rposition(|d| *d > T::zero()).expect("positive mass"))
        } else {
            chosen.iter().position(|c| !c).expect("k <= n")
        };
        chosen[pick] = true;
        centroids.push(points[pick].clone());
        for (d, p) in d2.iter_mut().zip(points) {
            *d = (*d).min(sq_dist(p, &points[pick]));
        }
    }
    centroids
}

/// Moves the centroid of every empty cluster onto the point farthest from
/// its own centroid, relabelling that point.
fn repair_empty<T: Real>(points: &[Vec<T>], centroids: &mut [Vec<T>], labels: &mut [usize]) {
    let k = centroids.len();
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let far = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .map(|i| (i, sq_dist(&points[i], &centroids[labels[i]])))
            .fold(None::<(usize, T)>, |acc, (i, d)| match acc {
                Some((_, bd)) if bd >= d => acc,
                _ => Some((i, d)),
            });
        let Some((i, _)) = far else {
            return;
        };
        centroids[empty] = points[i].clone();
        labels[i] = empty;
    }
}

/// k-means++ seeding followed by Lloyd iterations.
pub fn kmeans_fit<T: Real>(points: &[Vec<T>], config: &KMeansConfig) -> Result<ClusterModel<T>> {
    let k = config.k;
    if points.is_empty() {
        return Err(Error::Empty("no embeddings to cluster"));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if k > points.len() {
        return Err(Error::InvalidInput(format!(
            "k = {k} exceeds the number of points ({})",
            points.len()
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::ShapeMismatch("embeddings differ in dimension".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = kmeans_pp(points, k, &mut rng);
    let mut labels = vec![0usize; points.len()];
    let mut history = Vec::new();
    let tol = T::lit(config.tol);
    let mut iterations = 0;

    for _ in 0..config.max_iter.max(1) {
        iterations += 1;
        for (l, p) in labels.iter_mut().zip(points) {
            *l = nearest(&centroids, p).0;
        }
        repair_empty(points, &mut centroids, &mut labels);
        history.push(inertia_of(points, &centroids, &labels));

        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in points.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s = *s + *v;
            }
        }
        let mut shift = T::zero();
        for j in 0..k {
            if counts[j] == 0 {
                continue;
            }
            let inv = T::one() / T::from_usize_lossy(counts[j]);
            let new: Vec<T> = sums[j].iter().map(|s| *s * inv).collect();
            shift = shift.max(sq_dist(&new, &centroids[j]).sqrt());
            centroids[j] = new;
        }
        if shift < tol {
            break;
        }
    }
    for (l, p) in labels.iter_mut().zip(points) {
        *l = nearest(&centroids, p).0;
    }
    repair_empty(points, &mut centroids, &mut labels);
    let inertia = inertia_of(points, &centroids, &labels);
    Ok(ClusterModel {
        k,
        centroids,
        labels,
        inertia,
        inertia_history: history,
        iterations,
    })
}

fn inertia_of<T: Real>(points: &[Vec<T>], centroids: &[Vec<T>], labels: &[usize]) -> T {
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| sq_dist(p, &centroids[l]))
        .sum()
}

impl<T: Real> ClusterModel<T> {
    /// Nearest centroid by Euclidean distance, lowest id on ties.
    pub fn assign(&self, embedding: &[T]) -> Result<usize> {
        let dim = self.centroids[0].len();
        if embedding.len() != dim {
            return Err(Error::ShapeMismatch(format!(
                "embedding has {} entries, centroids have {dim}",
                embedding.len()
            )));
        }
        Ok(nearest(&self.centroids, embedding).0)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::num::Real;

fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

/// Mean silhouette coefficient. Points in singleton clusters score 0.
pub fn silhouette<T: Real, L: Ord + Clone>(points: &[Vec<T>], labels: &[L]) -> Result<T> {
    if points.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} points vs {} labels",
            points.len(),
            labels.len()
        )));
    }
    let mut groups: BTreeMap<L, Vec<usize>> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        groups.entry(l.clone()).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(Error::DegenerateInput("silhouette needs at least two clusters".into()));
    }
    let mut total = T::zero();
    for (i, p) in points.iter().enumerate() {
        let own = &groups[&labels[i]];
        if own.len() == 1 {
            continue;
        }
        let mean_to = |members: &[usize], skip_self: bool| {
            let n = members.len() - usize::from(skip_self);
            let s: T = members.iter().filter(|&&j| j != i).map(|&j| dist(p, &points[j])).sum();
            s / T::from_usize_lossy(n)
        };
        let a = mean_to(own, true);
        let b = groups
            .iter()
            .filter(|(l, _)| **l != labels[i])
            .map(|(_, m)| mean_to(m, false))
            .fold(T::infinity(), T::min);
        let m = a.max(b);
        if m > T::zero() {
            total = total + (b - a) / m;
        }
    }
    Ok(total / T::from_usize_lossy(points.len()))
}

/// Fraction of points whose cluster's majority truth label equals their own.
pub fn purity<P: Ord + Clone, L: Ord + Clone>(predicted: &[P], truth: &[L]) -> Result<f64> {
    if predicted.len() != truth.len() || predicted.is_empty() {
        return Err(Error::ShapeMismatch("purity needs equal, non-empty label lists".into()));
    }
    let mut table: BTreeMap<P, BTreeMap<L, usize>> = BTreeMap::new();
    for (p, t) in predicted.iter().zip(truth) {
        *table.entry(p.clone()).or_default().entry(t.clone()).or_default() += 1;
    }
    let hits: usize = table.values().map(|row| row.values().copied().max().unwrap_or(0)).sum();
    Ok(hits as f64 / predicted.len() as f64)
}

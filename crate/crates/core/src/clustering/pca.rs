use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, Mat};
use crate::num::Real;

/// Projects points onto their top `dims` principal components.
///
/// Each component's sign is fixed so its largest-magnitude loading is
/// positive.
pub fn pca_project<T: Real>(points: &[Vec<T>], dims: usize) -> Result<Vec<Vec<T>>> {
    if points.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "projection needs at least 2 points, got {}",
            points.len()
        )));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::ShapeMismatch("points differ in dimension".into()));
    }
    let n = T::from_usize_lossy(points.len());
    let mean: Vec<T> = (0..d)
        .map(|j| points.iter().map(|p| p[j]).sum::<T>() / n)
        .collect();
    let centered: Vec<Vec<T>> = points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(a, m)| *a - *m).collect())
        .collect();
    let mut cov = Mat::zeros(d, d);
    for p in &centered {
        cov.add_outer(p, p);
    }
    let (_, vectors) = symmetric_eigen(&cov)?;

    let mut components = Vec::with_capacity(dims);
    for c in 0..dims {
        let mut v = if c < d { vectors.column(c) } else { vec![T::zero(); d] };
        let lead = v
            .iter()
            .copied()
            .fold(T::zero(), |acc, x| if x.abs() > acc.abs() { x } else { acc });
        if lead < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
    }
    Ok(centered
        .iter()
        .map(|p| {
            components
                .iter()
                .map(|v| p.iter().zip(v).map(|(a, b)| *a * *b).sum())
                .collect()
        })
        .collect())
}

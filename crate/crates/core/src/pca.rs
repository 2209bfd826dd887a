//! Principal component analysis over document vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eigen::symmetric_eigen;

#[derive(Debug, Error, PartialEq)]
pub enum PcaError {
    #[error("need at least two vectors, got {0}")]
    TooFewVectors(usize),
    #[error("cannot keep {k} components from {n} vectors of dimension {d}")]
    KTooLarge { k: usize, n: usize, d: usize },
    #[error("number of components must be at least one")]
    ZeroComponents,
    #[error("expected a vector of length {expected}, got {got}")]
    DimsMismatch { expected: usize, got: usize },
}

/// A fitted projection onto the top-`k` principal axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` rows of length `d`, pairwise orthonormal.
    pub components: Vec<Vec<f64>>,
    pub k: usize,
    pub explained_variance_ratio: f64,
}

/// Fits PCA on the rows of `vectors` keeping `k` components.
///
/// Components are eigenvectors of the sample covariance in descending
/// eigenvalue order. Each component is oriented so its entry of largest
/// magnitude (first such entry on ties) is positive.
pub fn pca_fit(vectors: &[Vec<f64>], k: usize) -> Result<PcaModel, PcaError> {
    let n = vectors.len();
    if n < 2 {
        return Err(PcaError::TooFewVectors(n));
    }
    let d = vectors[0].len();
    if let Some(bad) = vectors.iter().find(|v| v.len() != d) {
        return Err(PcaError::DimsMismatch {
            expected: d,
            got: bad.len(),
        });
    }
    if k == 0 {
        return Err(PcaError::ZeroComponents);
    }
    if k > d || k > n {
        return Err(PcaError::KTooLarge { k, n, d });
    }

    let mut mean = vec![0.0; d];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(v) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }

    let centered: Vec<Vec<f64>> = vectors
        .iter()
        .map(|v| v.iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();

    // lower triangle of the sample covariance
    let mut cov = vec![vec![0.0; d]; d];
    for row in &centered {
        for i in 0..d {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            let cov_i = &mut cov[i];
            for j in 0..=i {
                cov_i[j] += ri * row[j];
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in 0..=i {
            let value = cov[i][j] / denom;
            cov[i][j] = value;
            cov[j][i] = value;
        }
    }

    let eig = symmetric_eigen(&cov);
    let variances: Vec<f64> = eig.values.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = variances.iter().sum();
    let kept: f64 = variances[..k].iter().sum();
    let explained_variance_ratio = if total > 0.0 { (kept / total).clamp(0.0, 1.0) } else { 1.0 };

    let components = eig
        .vectors
        .into_iter()
        .take(k)
        .map(orient)
        .collect();

    Ok(PcaModel {
        mean,
        components,
        k,
        explained_variance_ratio,
    })
}

fn orient(mut v: Vec<f64>) -> Vec<f64> {
    let mut pivot = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[pivot].abs() {
            pivot = i;
        }
    }
    if v[pivot] < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    v
}

impl PcaModel {
    pub fn input_dims(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, v: &[f64]) -> Result<Vec<f64>, PcaError> {
        pca_transform(self, v)
    }
}

/// `components . (v - mean)`
pub fn pca_transform(model: &PcaModel, v: &[f64]) -> Result<Vec<f64>, PcaError> {
    if v.len() != model.mean.len() {
        return Err(PcaError::DimsMismatch {
            expected: model.mean.len(),
            got: v.len(),
        });
    }
    Ok(model
        .components
        .iter()
        .map(|c| c.iter().zip(v.iter().zip(&model.mean)).map(|(a, (x, m))| a * (x - m)).sum())
        .collect())
}

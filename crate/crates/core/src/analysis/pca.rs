//! Principal component analysis through the eigendecomposition of the
//! sample covariance.
//!
//! When there are fewer samples than dimensions (the usual case for word
//! embeddings) the decomposition runs on the `n x n` Gram matrix of the
//! centered data instead, which has the same non-zero spectrum; the
//! directions are mapped back through the data.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use libm::{fabs, sqrt};

use crate::linalg::{symmetric_eigen, SquareMatrix};

/// Eigenvalues at or below this fraction of the total variance count as zero.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PcaError {
    ZeroComponents,
    EmptyInput,
    DimensionMismatch { expected: usize, found: usize },
}

impl fmt::Display for PcaError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PcaError::ZeroComponents => f.write_str("at least one component is required"),
            PcaError::EmptyInput => f.write_str("no vectors to fit"),
            PcaError::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
        }
    }
}

impl core::error::Error for PcaError {}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub mean: Vec<f64>,
    /// Unit principal directions, `k` of them. Directions beyond the rank of
    /// the data are all zeros.
    pub components: Vec<Vec<f64>>,
    /// Sample-covariance eigenvalue for each component.
    pub explained_variance: Vec<f64>,
    /// Share of the total variance captured by each component; non-increasing.
    pub explained_variance_ratio: Vec<f64>,
    /// Sum of the covariance eigenvalues (trace of the covariance).
    pub total_variance: f64,
    /// Number of directions with non-negligible variance.
    pub rank: usize,
    /// The data has fewer than `k` independent directions; the missing
    /// components and ratios are zero-padded.
    pub degenerate: bool,
    /// Each input projected onto the components.
    pub projected: Vec<Vec<f64>>,
}

impl PcaFit {
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(x.iter().zip(&self.mean)).map(|(ci, (xi, mi))| ci * (xi - mi)).sum())
            .collect()
    }
}

/// Fits `k` principal components to `rows` and projects every row.
///
/// Sign convention: the largest-magnitude coordinate of every component is
/// non-negative (the first one wins a tie), so repeated fits agree exactly.
pub fn pca_fit_project<R: AsRef<[f64]>>(rows: &[R], k: usize) -> Result<PcaFit, PcaError> {
    if k == 0 {
        return Err(PcaError::ZeroComponents);
    }
    let n = rows.len();
    if n == 0 {
        return Err(PcaError::EmptyInput);
    }
    let dim = rows[0].as_ref().len();
    if dim == 0 {
        return Err(PcaError::EmptyInput);
    }
    for r in rows {
        if r.as_ref().len() != dim {
            return Err(PcaError::DimensionMismatch {
                expected: dim,
                found: r.as_ref().len(),
            });
        }
    }

    let mut mean = vec![0.0; dim];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r.as_ref()) {
            *m += x;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.as_ref().iter().zip(&mean).map(|(x, m)| x - m).collect())
        .collect();
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let total_variance: f64 = centered
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        / denom;

    let (values, directions) = if dim <= n {
        covariance_route(&centered, dim, denom)
    } else {
        gram_route(&centered, dim, denom)
    };

    let threshold = total_variance * RANK_TOLERANCE;
    let rank = values.iter().filter(|&&v| v > threshold && v > 0.0).count();

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for i in 0..k {
        if i < rank {
            let mut c = directions[i].clone();
            fix_sign(&mut c);
            components.push(c);
            explained_variance.push(values[i]);
        } else {
            components.push(vec![0.0; dim]);
            explained_variance.push(0.0);
        }
    }
    let explained_variance_ratio = explained_variance
        .iter()
        .map(|v| if total_variance > 0.0 { v / total_variance } else { 0.0 })
        .collect();
    let projected = centered
        .iter()
        .map(|x| components.iter().map(|c| dot(c, x)).collect())
        .collect();

    Ok(PcaFit {
        mean,
        components,
        explained_variance,
        explained_variance_ratio,
        total_variance,
        rank,
        degenerate: rank < k,
        projected,
    })
}

fn covariance_route(centered: &[Vec<f64>], dim: usize, denom: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut cov = SquareMatrix::zeros(dim);
    for i in 0..dim {
        for j in 0..=i {
            let s: f64 = centered.iter().map(|x| x[i] * x[j]).sum::<f64>() / denom;
            cov.set(i, j, s);
            cov.set(j, i, s);
        }
    }
    let eig = symmetric_eigen(&cov);
    (eig.values, eig.vectors)
}

fn gram_route(centered: &[Vec<f64>], dim: usize, denom: f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = centered.len();
    let mut gram = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let s = dot(&centered[i], &centered[j]) / denom;
            gram.set(i, j, s);
            gram.set(j, i, s);
        }
    }
    let eig = symmetric_eigen(&gram);
    let directions = eig
        .vectors
        .iter()
        .map(|u| {
            let mut c = vec![0.0; dim];
            for (ui, x) in u.iter().zip(centered) {
                for (cj, xj) in c.iter_mut().zip(x) {
                    *cj += ui * xj;
                }
            }
            let norm = sqrt(dot(&c, &c));
            if norm > 0.0 {
                for cj in c.iter_mut() {
                    *cj /= norm;
                }
            }
            c
        })
        .collect();
    (eig.values, directions)
}

fn fix_sign(c: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in c.iter().enumerate() {
        if fabs(*x) > fabs(c[best]) {
            best = i;
        }
    }
    if c[best] < 0.0 {
        for x in c.iter_mut() {
            *x = -*x;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

//! Density-estimation PCA over scaled frequency vectors.
//!
//! Fitting eigendecomposes the sample covariance of mean-centered training
//! windows and keeps the top `k` components. The model is the low-rank
//! Gaussian
//!
//! ```text
//! N(mean, W_k diag(eig_1..eig_k - sigma2) W_k' + sigma2 I)
//! ```
//!
//! with `sigma2` the mean of the discarded eigenvalues (floored), so the
//! density stays proper in all `d` dimensions. The anomaly score of a window
//! is its negative log-likelihood: higher means more anomalous.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::ingest::Scaler;

/// Floor for the residual noise variance and for retained eigenvalues when
/// evaluating the density.
pub const VARIANCE_FLOOR: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum PcaError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("rank {k} out of range for dimension {d}")]
    BadRank { k: usize, d: usize },
    #[error("eigendecomposition did not converge")]
    EigenFailure,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Fitted low-rank Gaussian over scaled windows.
#[derive(Debug, Clone)]
pub struct PcaDensityModel {
    mean: DVector<f64>,
    /// d x k, orthonormal columns, deterministic sign convention.
    components: DMatrix<f64>,
    /// All d eigenvalues of the training covariance, descending.
    eigenvalues: Vec<f64>,
    k: usize,
    sigma2: f64,
    scaler: Scaler,
}

/// Fits the density model on `n x d` scaled training rows.
///
/// Covariance uses mean-centered rows with `1/(n-1)` normalization.
/// Requires `n >= 2` and `1 <= k <= d`. The eigenvector sign convention
/// (largest-magnitude entry positive, lowest index on ties) makes refits of
/// the same data bit-identical.
pub fn fit_pca(rows: &[Vec<f64>], k: usize, scaler: Scaler) -> Result<PcaDensityModel, PcaError> {
    let n = rows.len();
    if n < 2 {
        return Err(PcaError::InsufficientData(format!(
            "pca needs >= 2 training windows, got {n}"
        )));
    }
    let d = rows[0].len();
    if k == 0 || k > d {
        return Err(PcaError::BadRank { k, d });
    }
    for row in rows {
        if row.len() != d {
            return Err(PcaError::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
    }

    let mut mean = DVector::zeros(d);
    for row in rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    mean /= n as f64;

    let mut cov = DMatrix::zeros(d, d);
    let mut centered = DVector::zeros(d);
    for row in rows {
        for (c, (x, m)) in centered.iter_mut().zip(row.iter().zip(mean.iter())) {
            *c = x - m;
        }
        cov.syger(1.0 / (n - 1) as f64, &centered, &centered, 1.0);
    }
    // syger fills the lower triangle; mirror it.
    for i in 0..d {
        for j in (i + 1)..d {
            cov[(i, j)] = cov[(j, i)];
        }
    }

    let eigen = nalgebra::SymmetricEigen::try_new(cov, f64::EPSILON, 10_000)
        .ok_or(PcaError::EigenFailure)?;

    // Sort descending; covariance is PSD so clamp tiny negative round-off.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .total_cmp(&eigen.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&i| eigen.eigenvalues[i].max(0.0))
        .collect();

    let mut components = DMatrix::zeros(d, k);
    for (col, &src) in order.iter().take(k).enumerate() {
        let mut v = eigen.eigenvectors.column(src).clone_owned();
        let mut pivot = 0;
        for i in 1..d {
            if v[i].abs() > v[pivot].abs() {
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            v.neg_mut();
        }
        components.set_column(col, &v);
    }

    let sigma2 = if k < d {
        let tail = &eigenvalues[k..];
        (tail.iter().sum::<f64>() / tail.len() as f64).max(VARIANCE_FLOOR)
    } else {
        VARIANCE_FLOOR
    };

    Ok(PcaDensityModel {
        mean,
        components,
        eigenvalues,
        k,
        sigma2,
        scaler,
    })
}

impl PcaDensityModel {
    /// Rebuilds a model from serialized parts, re-checking the invariants.
    pub fn from_parts(
        mean: Vec<f64>,
        components: DMatrix<f64>,
        eigenvalues: Vec<f64>,
        k: usize,
        sigma2: f64,
        scaler: Scaler,
    ) -> Result<Self, PcaError> {
        let d = mean.len();
        if components.nrows() != d || components.ncols() != k || eigenvalues.len() != d {
            return Err(PcaError::DimensionMismatch {
                expected: d,
                got: components.nrows(),
            });
        }
        if k == 0 || k > d || sigma2 <= 0.0 {
            return Err(PcaError::BadRank { k, d });
        }
        for i in 0..k {
            for j in i..k {
                let dot = components.column(i).dot(&components.column(j));
                let expect = if i == j { 1.0 } else { 0.0 };
                if (dot - expect).abs() > 1e-8 {
                    return Err(PcaError::EigenFailure);
                }
            }
        }
        if eigenvalues.windows(2).any(|w| w[1] > w[0] + 1e-10) {
            return Err(PcaError::EigenFailure);
        }
        Ok(Self {
            mean: DVector::from_vec(mean),
            components,
            eigenvalues,
            k,
            sigma2,
            scaler,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn components(&self) -> &DMatrix<f64> {
        &self.components
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    fn check_dim(&self, got: usize) -> Result<(), PcaError> {
        if got != self.dim() {
            return Err(PcaError::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }

    /// Anomaly score of a scaled window: `-log p(x)` under the model
    /// Gaussian. Finite for any finite input.
    ///
    /// The model covariance has eigenvalue `eig_i` along component `i` and
    /// `sigma2` on the orthogonal complement, so the quadratic form and
    /// log-determinant are evaluated without materializing the d x d matrix.
    pub fn score(&self, x: &[f64]) -> Result<f64, PcaError> {
        self.check_dim(x.len())?;
        let d = self.dim() as f64;
        let centered = DVector::from_column_slice(x) - &self.mean;
        let projected = self.components.tr_mul(&centered);

        let mut log_det = (d - self.k as f64) * self.sigma2.ln();
        let mut mahalanobis = (centered.norm_squared() - projected.norm_squared()) / self.sigma2;
        for (z, &eig) in projected.iter().zip(&self.eigenvalues) {
            let eig = eig.max(VARIANCE_FLOOR);
            log_det += eig.ln();
            mahalanobis += z * z / eig;
        }
        Ok(0.5 * (d * (2.0 * std::f64::consts::PI).ln() + log_det + mahalanobis))
    }

    /// Scores a raw count vector by applying the model's scaler first.
    pub fn score_counts(&self, counts: &[u32]) -> Result<f64, PcaError> {
        self.check_dim(counts.len())?;
        self.score(&self.scaler.transform_counts(counts))
    }

    /// Squared distance between a scaled window and its projection onto the
    /// retained components. Secondary diagnostic; the anomaly score is
    /// [`Self::score`].
    pub fn reconstruction_error(&self, x: &[f64]) -> Result<f64, PcaError> {
        self.check_dim(x.len())?;
        let centered = DVector::from_column_slice(x) - &self.mean;
        let projected = self.components.tr_mul(&centered);
        Ok((centered.norm_squared() - projected.norm_squared()).max(0.0))
    }

    /// Cumulative explained-variance ratios over all `d` eigenvalues:
    /// monotone non-decreasing, ending at 1.0.
    pub fn explained_variance(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().sum();
        if total <= 0.0 {
            return vec![1.0; self.eigenvalues.len()];
        }
        let mut acc = 0.0;
        self.eigenvalues
            .iter()
            .map(|e| {
                acc += e;
                (acc / total).min(1.0)
            })
            .collect()
    }
}

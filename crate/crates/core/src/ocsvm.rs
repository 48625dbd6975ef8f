//! One-class SVM with an RBF kernel, trained on legitimate windows only.
//!
//! Solves the standard nu-parameterized one-class dual
//!
//! ```text
//! min 1/2 a'Qa   s.t.  0 <= a_i <= 1/(nu n),  sum a = 1,   Q_ij = K(x_i, x_j)
//! ```
//!
//! by pairwise coordinate optimization on the maximal-KKT-violation pair.
//! The anomaly score of a window is the negated decision value
//! `-(sum_i a_i K(sv_i, x) - rho)`: positive means outside the learned
//! region.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Scaler;

/// Stopping tolerance on the maximal KKT violation.
pub const KKT_TOLERANCE: f64 = 1e-4;
/// Hard cap on pair updates before giving up.
pub const MAX_PAIR_UPDATES: usize = 1_000_000;
/// Alphas above this threshold are kept as support vectors.
pub const SUPPORT_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum OcsvmError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("smo did not converge within {updates} pair updates")]
    NonConvergence { updates: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bad parameter: {0}")]
    BadParam(String),
}

/// RBF kernel width selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gamma {
    /// `1 / (d * mean per-dimension variance)`, denominator floored at 1e-8.
    Scale,
    Value(f64),
}

/// Training knobs. The defaults are the standard novelty-detection choices.
#[derive(Debug, Clone, Copy)]
pub struct OcsvmParams {
    pub nu: f64,
    pub gamma: Gamma,
    pub tol: f64,
    pub max_pair_updates: usize,
    /// Kernel column cache budget in bytes; beyond it, columns are
    /// recomputed on demand.
    pub cache_bytes: usize,
}

impl Default for OcsvmParams {
    fn default() -> Self {
        Self {
            nu: 0.05,
            gamma: Gamma::Scale,
            tol: KKT_TOLERANCE,
            max_pair_updates: MAX_PAIR_UPDATES,
            cache_bytes: 64 << 20,
        }
    }
}

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * sq).exp()
}

/// Fitted one-class SVM. Only the rows with non-negligible alphas are kept.
#[derive(Debug, Clone)]
pub struct OcsvmModel {
    support_vectors: Vec<Vec<f64>>,
    alphas: Vec<f64>,
    /// Training-row indices of the support vectors.
    support_indices: Vec<usize>,
    rho: f64,
    gamma: f64,
    nu: f64,
    scaler: Scaler,
}

/// Bounded FIFO cache of kernel matrix columns.
struct ColumnCache<'a> {
    rows: &'a [Vec<f64>],
    gamma: f64,
    columns: Vec<Option<Box<[f64]>>>,
    resident: std::collections::VecDeque<usize>,
    capacity: usize,
}

impl<'a> ColumnCache<'a> {
    fn new(rows: &'a [Vec<f64>], gamma: f64, cache_bytes: usize) -> Self {
        let n = rows.len();
        // keep at least the two columns a pair update touches
        let capacity = (cache_bytes / (8 * n.max(1))).clamp(2, n.max(2));
        Self {
            rows,
            gamma,
            columns: vec![None; n],
            resident: std::collections::VecDeque::new(),
            capacity,
        }
    }

    fn fill(&mut self, i: usize, protect: usize) {
        if self.columns[i].is_some() {
            return;
        }
        while self.resident.len() >= self.capacity {
            // never evict the partner column of the current pair
            let victim = if self.resident.front() == Some(&protect) {
                if self.resident.len() < 2 {
                    break;
                }
                self.resident.remove(1).unwrap()
            } else {
                self.resident.pop_front().unwrap()
            };
            self.columns[victim] = None;
        }
        let col: Box<[f64]> = self
            .rows
            .iter()
            .map(|r| rbf_kernel(r, &self.rows[i], self.gamma))
            .collect();
        self.columns[i] = Some(col);
        self.resident.push_back(i);
    }

    fn column(&self, i: usize) -> &[f64] {
        self.columns[i].as_deref().expect("column filled")
    }
}

/// Resolved gamma for the given training rows.
pub fn resolve_gamma(rows: &[Vec<f64>], gamma: Gamma) -> f64 {
    match gamma {
        Gamma::Value(g) => g,
        Gamma::Scale => {
            let n = rows.len() as f64;
            let d = rows.first().map_or(0, Vec::len);
            let mut mean = vec![0.0; d];
            for row in rows {
                for (m, x) in mean.iter_mut().zip(row) {
                    *m += x / n;
                }
            }
            let mut var_sum = 0.0;
            for row in rows {
                for (x, m) in row.iter().zip(&mean) {
                    var_sum += (x - m) * (x - m) / n;
                }
            }
            // var_sum == d * mean per-dimension variance
            1.0 / var_sum.max(1e-8)
        }
    }
}

/// Trains the one-class SVM on `n x d` scaled rows.
///
/// Alphas start at the box corner libsvm uses (`1/(nu n)` on the first
/// `floor(nu n)` rows, remainder on the next), which already satisfies the
/// equality constraint. Each iteration picks the maximal-violation pair
/// (lowest index on ties) and optimizes it analytically, so refits of the
/// same rows are bit-identical.
pub fn fit_ocsvm(
    rows: &[Vec<f64>],
    params: &OcsvmParams,
    scaler: Scaler,
) -> Result<OcsvmModel, OcsvmError> {
    let n = rows.len();
    if n < 2 {
        return Err(OcsvmError::InsufficientData(format!(
            "ocsvm needs >= 2 training windows, got {n}"
        )));
    }
    if !(params.nu > 0.0 && params.nu <= 1.0) {
        return Err(OcsvmError::BadParam(format!(
            "nu must be in (0, 1], got {}",
            params.nu
        )));
    }
    let d = rows[0].len();
    for row in rows {
        if row.len() != d {
            return Err(OcsvmError::DimensionMismatch {
                expected: d,
                got: row.len(),
            });
        }
    }
    let gamma = resolve_gamma(rows, params.gamma);
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(OcsvmError::BadParam(format!(
            "gamma must be positive, got {gamma}"
        )));
    }

    let c = 1.0 / (params.nu * n as f64);
    let mut alpha = vec![0.0f64; n];
    let n_full = (params.nu * n as f64).floor() as usize;
    for a in alpha.iter_mut().take(n_full.min(n)) {
        *a = c;
    }
    if n_full < n {
        alpha[n_full] = (params.nu * n as f64 - n_full as f64) * c;
    }

    let mut cache = ColumnCache::new(rows, gamma, params.cache_bytes);

    // gradient of 1/2 a'Qa is Qa
    let mut gradient = vec![0.0f64; n];
    for (i, &a) in alpha.iter().enumerate() {
        if a > 0.0 {
            cache.fill(i, i);
            for (g, q) in gradient.iter_mut().zip(cache.column(i)) {
                *g += a * q;
            }
        }
    }

    let mut updates = 0usize;
    loop {
        // i: steepest descent among coordinates free to increase,
        // j: steepest ascent among coordinates free to decrease.
        let mut up: Option<usize> = None;
        let mut low: Option<usize> = None;
        for idx in 0..n {
            if alpha[idx] < c && up.is_none_or(|u| gradient[idx] < gradient[u]) {
                up = Some(idx);
            }
            if alpha[idx] > 0.0 && low.is_none_or(|l| gradient[idx] > gradient[l]) {
                low = Some(idx);
            }
        }
        let (Some(i), Some(j)) = (up, low) else { break };
        if i == j || gradient[j] - gradient[i] <= params.tol {
            break;
        }
        if updates >= params.max_pair_updates {
            return Err(OcsvmError::NonConvergence { updates });
        }

        cache.fill(i, j);
        cache.fill(j, i);
        // RBF diagonal is 1
        let eta = (2.0 - 2.0 * cache.column(i)[j]).max(1e-12);
        let step = ((gradient[j] - gradient[i]) / eta)
            .min(c - alpha[i])
            .min(alpha[j]);

        // exact box landing keeps the 0 / c comparisons above reliable
        if step >= c - alpha[i] {
            alpha[i] = c;
        } else {
            alpha[i] += step;
        }
        if step >= alpha[j] {
            alpha[j] = 0.0;
        } else {
            alpha[j] -= step;
        }
        let col_i = cache.column(i);
        let col_j = cache.column(j);
        for ((g, qi), qj) in gradient.iter_mut().zip(col_i).zip(col_j) {
            *g += step * (qi - qj);
        }
        updates += 1;
    }

    // rho: mean gradient over free vectors, else midpoint of the active gaps
    let free: Vec<usize> = (0..n).filter(|&i| alpha[i] > 0.0 && alpha[i] < c).collect();
    let rho = if free.is_empty() {
        let min_up = (0..n)
            .filter(|&i| alpha[i] < c)
            .map(|i| gradient[i])
            .fold(f64::INFINITY, f64::min);
        let max_low = (0..n)
            .filter(|&i| alpha[i] > 0.0)
            .map(|i| gradient[i])
            .fold(f64::NEG_INFINITY, f64::max);
        match (min_up.is_finite(), max_low.is_finite()) {
            (true, true) => (min_up + max_low) / 2.0,
            (true, false) => min_up,
            _ => max_low,
        }
    } else {
        free.iter().map(|&i| gradient[i]).sum::<f64>() / free.len() as f64
    };

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    let mut support_indices = Vec::new();
    for (i, &a) in alpha.iter().enumerate() {
        if a > SUPPORT_THRESHOLD {
            support_vectors.push(rows[i].clone());
            alphas.push(a);
            support_indices.push(i);
        }
    }

    Ok(OcsvmModel {
        support_vectors,
        alphas,
        support_indices,
        rho,
        gamma,
        nu: params.nu,
        scaler,
    })
}

impl OcsvmModel {
    /// Rebuilds a model from serialized parts, re-checking the invariants.
    pub fn from_parts(
        support_vectors: Vec<Vec<f64>>,
        alphas: Vec<f64>,
        support_indices: Vec<usize>,
        rho: f64,
        gamma: f64,
        nu: f64,
        scaler: Scaler,
    ) -> Result<Self, OcsvmError> {
        if support_vectors.len() != alphas.len() || support_vectors.len() != support_indices.len() {
            return Err(OcsvmError::BadParam(
                "support vectors, alphas, and indices must align".into(),
            ));
        }
        if !(nu > 0.0 && nu <= 1.0) {
            return Err(OcsvmError::BadParam(format!(
                "nu must be in (0, 1], got {nu}"
            )));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(OcsvmError::BadParam(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        Ok(Self {
            support_vectors,
            alphas,
            support_indices,
            rho,
            gamma,
            nu,
            scaler,
        })
    }

    pub fn dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn support_vectors(&self) -> &[Vec<f64>] {
        &self.support_vectors
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn support_indices(&self) -> &[usize] {
        &self.support_indices
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    fn check_dim(&self, got: usize) -> Result<(), OcsvmError> {
        let expected = self.support_vectors.first().map_or(self.dim(), Vec::len);
        if got != expected {
            return Err(OcsvmError::DimensionMismatch { expected, got });
        }
        Ok(())
    }

    /// Signed decision value `sum_i a_i K(sv_i, x) - rho`; negative means
    /// outside the learned region.
    pub fn decision(&self, x: &[f64]) -> Result<f64, OcsvmError> {
        self.check_dim(x.len())?;
        let kernel_sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .map(|(sv, a)| a * rbf_kernel(sv, x, self.gamma))
            .sum();
        Ok(kernel_sum - self.rho)
    }

    /// Anomaly score of a scaled window: the negated decision value, i.e.
    /// the distance past the boundary. Positive means anomalous.
    pub fn score(&self, x: &[f64]) -> Result<f64, OcsvmError> {
        Ok(-self.decision(x)?)
    }

    /// Scores a raw count vector by applying the model's scaler first.
    pub fn score_counts(&self, counts: &[u32]) -> Result<f64, OcsvmError> {
        if counts.len() != self.scaler.dim() {
            return Err(OcsvmError::DimensionMismatch {
                expected: self.scaler.dim(),
                got: counts.len(),
            });
        }
        self.score(&self.scaler.transform_counts(counts))
    }

    /// Dual objective `1/2 a'Qa` of the stored solution.
    pub fn dual_objective(&self) -> f64 {
        let mut obj = 0.0;
        for (i, (svi, ai)) in self.support_vectors.iter().zip(&self.alphas).enumerate() {
            for (svj, aj) in self.support_vectors.iter().zip(&self.alphas).take(i) {
                obj += ai * aj * rbf_kernel(svi, svj, self.gamma);
            }
            obj += 0.5 * ai * ai;
        }
        obj
    }
}

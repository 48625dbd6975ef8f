//! Single-layer LSTM next-window predictor, written from scratch in f64.
//!
//! The network reads the last `delta` scaled frequency vectors of a session
//! and predicts the next one through a dense head on the final hidden state.
//! Training minimizes mean squared error with backpropagation through time
//! and Adam updates on mini-batches. Everything is deterministic given the
//! seed: initialization, batch shuffling, and the fixed reduction order.
//!
//! The anomaly score of a window is the inverse-frequency-weighted distance
//! between the prediction and the observation, computed in raw count space
//! (the prediction is inverse-scaled first). The detection threshold is the
//! upper empirical `(1 - p)`-quantile of distances on legitimate
//! calibration data, so its exceedance rate there is at most `p` by
//! construction.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{self, IdfWeights, Scaler, ScalerKind};
use crate::trace::WindowedSeries;

/// Smallest calibrated threshold; keeps `T > 0` even when every calibration
/// distance is zero.
pub const THRESHOLD_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LstmError {
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("training diverged: loss became non-finite at epoch {epoch}")]
    TrainingDiverged { epoch: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("bad parameter: {0}")]
    BadParam(String),
}

/// Training hyper-parameters.
///
/// [`Default`] is the full-scale profile (100 hidden units, 150 epochs,
/// batch 128, 15-window history); [`LstmHyperparams::test_profile`] is the
/// reduced profile for desk-scale runs and CI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LstmHyperparams {
    pub hidden_units: usize,
    /// Sequence length: windows of history fed to the network.
    pub delta: usize,
    pub batch_size: usize,
    pub epochs: usize,
    /// Chronological fraction of subsequences held out for validation.
    pub validation_split: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Global gradient-norm clip; counts are bursty enough to need one.
    pub clip_norm: f64,
    pub seed: u64,
}

impl Default for LstmHyperparams {
    fn default() -> Self {
        Self {
            hidden_units: 100,
            delta: 15,
            batch_size: 128,
            epochs: 150,
            validation_split: 0.20,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            clip_norm: 5.0,
            seed: 42,
        }
    }
}

impl LstmHyperparams {
    /// Reduced profile for fast desk-scale training runs.
    pub fn test_profile() -> Self {
        Self {
            hidden_units: 16,
            epochs: 40,
            batch_size: 32,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), LstmError> {
        if self.hidden_units == 0
            || self.delta == 0
            || self.batch_size == 0
            || self.epochs == 0
            || self.learning_rate <= 0.0
            || self.clip_norm <= 0.0
            || self.adam_eps <= 0.0
        {
            return Err(LstmError::BadParam(
                "hyper-parameters must be positive".into(),
            ));
        }
        if !(self.validation_split > 0.0 && self.validation_split < 1.0) {
            return Err(LstmError::BadParam(format!(
                "validation_split must be in (0, 1), got {}",
                self.validation_split
            )));
        }
        Ok(())
    }
}

const GATE_INPUT: usize = 0;
const GATE_FORGET: usize = 1;
const GATE_CELL: usize = 2;
const GATE_OUTPUT: usize = 3;

pub(crate) const TENSOR_NAMES: [&str; 14] = [
    "w_input", "w_forget", "w_cell", "w_output", "u_input", "u_forget", "u_cell", "u_output",
    "b_input", "b_forget", "b_cell", "b_output", "head_w", "head_b",
];

/// All trainable tensors. Gate weights map input (`w`, h x d) and recurrent
/// state (`u`, h x h) into each gate; the dense head (`head_w`, d x h) maps
/// the final hidden state to the predicted window.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Params {
    pub w: [DMatrix<f64>; 4],
    pub u: [DMatrix<f64>; 4],
    pub b: [DVector<f64>; 4],
    pub head_w: DMatrix<f64>,
    pub head_b: DVector<f64>,
}

impl Params {
    fn zeros(input_dim: usize, hidden: usize) -> Self {
        Self {
            w: std::array::from_fn(|_| DMatrix::zeros(hidden, input_dim)),
            u: std::array::from_fn(|_| DMatrix::zeros(hidden, hidden)),
            b: std::array::from_fn(|_| DVector::zeros(hidden)),
            head_w: DMatrix::zeros(input_dim, hidden),
            head_b: DVector::zeros(input_dim),
        }
    }

    /// Weights uniform in +-1/sqrt(h); forget-gate bias 1, other biases 0.
    fn init(input_dim: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut params = Self::zeros(input_dim, hidden);
        for slice in params.slices_mut() {
            for x in slice {
                *x = rng.gen_range(-bound..=bound);
            }
        }
        for b in &mut params.b {
            b.fill(0.0);
        }
        params.b[GATE_FORGET].fill(1.0);
        params.head_b.fill(0.0);
        params
    }

    fn slices(&self) -> [&[f64]; 14] {
        let [w0, w1, w2, w3] = &self.w;
        let [u0, u1, u2, u3] = &self.u;
        let [b0, b1, b2, b3] = &self.b;
        [
            w0.as_slice(),
            w1.as_slice(),
            w2.as_slice(),
            w3.as_slice(),
            u0.as_slice(),
            u1.as_slice(),
            u2.as_slice(),
            u3.as_slice(),
            b0.as_slice(),
            b1.as_slice(),
            b2.as_slice(),
            b3.as_slice(),
            self.head_w.as_slice(),
            self.head_b.as_slice(),
        ]
    }

    fn slices_mut(&mut self) -> [&mut [f64]; 14] {
        let [w0, w1, w2, w3] = self.w.each_mut();
        let [u0, u1, u2, u3] = self.u.each_mut();
        let [b0, b1, b2, b3] = self.b.each_mut();
        [
            w0.as_mut_slice(),
            w1.as_mut_slice(),
            w2.as_mut_slice(),
            w3.as_mut_slice(),
            u0.as_mut_slice(),
            u1.as_mut_slice(),
            u2.as_mut_slice(),
            u3.as_mut_slice(),
            b0.as_mut_slice(),
            b1.as_mut_slice(),
            b2.as_mut_slice(),
            b3.as_mut_slice(),
            self.head_w.as_mut_slice(),
            self.head_b.as_mut_slice(),
        ]
    }

    fn is_finite(&self) -> bool {
        self.slices()
            .iter()
            .all(|s| s.iter().all(|x| x.is_finite()))
    }

    fn scale(&mut self, factor: f64) {
        for slice in self.slices_mut() {
            for x in slice {
                *x *= factor;
            }
        }
    }

    fn global_norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct StepCache {
    x: DVector<f64>,
    h_prev: DVector<f64>,
    c_prev: DVector<f64>,
    gate_i: DVector<f64>,
    gate_f: DVector<f64>,
    gate_g: DVector<f64>,
    gate_o: DVector<f64>,
    tanh_cell: DVector<f64>,
}

fn gate_preactivation(
    params: &Params,
    gate: usize,
    x: &DVector<f64>,
    h_prev: &DVector<f64>,
) -> DVector<f64> {
    let mut a = params.b[gate].clone();
    a.gemv(1.0, &params.w[gate], x, 1.0);
    a.gemv(1.0, &params.u[gate], h_prev, 1.0);
    a
}

/// Runs the recurrence from zero state; returns the per-step caches and the
/// final hidden state.
fn forward_steps(
    params: &Params,
    seq: &[DVector<f64>],
    hidden: usize,
) -> (Vec<StepCache>, DVector<f64>) {
    let mut h = DVector::zeros(hidden);
    let mut c = DVector::zeros(hidden);
    let mut caches = Vec::with_capacity(seq.len());
    for x in seq {
        let gate_i = gate_preactivation(params, GATE_INPUT, x, &h).map(sigmoid);
        let gate_f = gate_preactivation(params, GATE_FORGET, x, &h).map(sigmoid);
        let gate_g = gate_preactivation(params, GATE_CELL, x, &h).map(f64::tanh);
        let gate_o = gate_preactivation(params, GATE_OUTPUT, x, &h).map(sigmoid);
        let cell = gate_f.component_mul(&c) + gate_i.component_mul(&gate_g);
        let tanh_cell = cell.map(f64::tanh);
        let h_next = gate_o.component_mul(&tanh_cell);
        caches.push(StepCache {
            x: x.clone(),
            h_prev: h,
            c_prev: c,
            gate_i,
            gate_f,
            gate_g,
            gate_o,
            tanh_cell,
        });
        h = h_next;
        c = cell;
    }
    (caches, h)
}

fn predict(params: &Params, seq: &[DVector<f64>], hidden: usize) -> DVector<f64> {
    let (_, h) = forward_steps(params, seq, hidden);
    let mut y = params.head_b.clone();
    y.gemv(1.0, &params.head_w, &h, 1.0);
    y
}

/// Accumulates the gradients of one sample's loss into `grads`, given
/// `d loss / d prediction`. Batch averaging is the caller's job.
fn backward(
    params: &Params,
    caches: &[StepCache],
    h_last: &DVector<f64>,
    dy: &DVector<f64>,
    grads: &mut Params,
) {
    grads.head_w.ger(1.0, dy, h_last, 1.0);
    grads.head_b += dy;

    let mut dh = params.head_w.tr_mul(dy);
    let mut dc_carry = DVector::zeros(h_last.len());

    for cache in caches.iter().rev() {
        let ones = DVector::from_element(cache.gate_o.len(), 1.0);

        let d_tanh_cell = &ones - cache.tanh_cell.component_mul(&cache.tanh_cell);
        let dc = dh.component_mul(&cache.gate_o).component_mul(&d_tanh_cell) + &dc_carry;

        let da_o = dh
            .component_mul(&cache.tanh_cell)
            .component_mul(&cache.gate_o)
            .component_mul(&(&ones - &cache.gate_o));
        let da_f = dc
            .component_mul(&cache.c_prev)
            .component_mul(&cache.gate_f)
            .component_mul(&(&ones - &cache.gate_f));
        let da_i = dc
            .component_mul(&cache.gate_g)
            .component_mul(&cache.gate_i)
            .component_mul(&(&ones - &cache.gate_i));
        let da_g = dc
            .component_mul(&cache.gate_i)
            .component_mul(&(&ones - cache.gate_g.component_mul(&cache.gate_g)));

        let gate_grads = [
            (GATE_INPUT, &da_i),
            (GATE_FORGET, &da_f),
            (GATE_CELL, &da_g),
            (GATE_OUTPUT, &da_o),
        ];
        let mut dh_prev = DVector::zeros(dh.len());
        for (gate, da) in gate_grads {
            grads.w[gate].ger(1.0, da, &cache.x, 1.0);
            grads.u[gate].ger(1.0, da, &cache.h_prev, 1.0);
            grads.b[gate] += da;
            dh_prev.gemv_tr(1.0, &params.u[gate], da, 1.0);
        }

        dc_carry = dc.component_mul(&cache.gate_f);
        dh = dh_prev;
    }
}

/// Fitted predictor with its scaler, distance weights, hyper-parameters,
/// and (once calibrated) detection threshold.
#[derive(Debug, Clone)]
pub struct LstmPredictor {
    input_dim: usize,
    hidden: usize,
    params: Params,
    scaler: Scaler,
    idf: IdfWeights,
    threshold: Option<f64>,
    hyperparams: LstmHyperparams,
}

/// Per-epoch training statistics plus the distances observed on the
/// held-out validation subsequences after training.
#[derive(Debug, Clone)]
pub struct TrainingReport {
    pub epochs: Vec<EpochStats>,
    /// Weighted prediction distances (count space) on the chronological
    /// validation tail; the natural calibration sample for the threshold.
    pub validation_distances: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

/// One scored window of a series.
#[derive(Debug, Clone)]
pub struct WindowScore {
    pub session_id: u32,
    pub window_index: usize,
    pub label: bool,
    pub score: f64,
    pub flag: bool,
}

/// Scores for every scoreable window, plus the count of windows that could
/// not be scored (the first `delta` of each session).
#[derive(Debug, Clone)]
pub struct SeriesScores {
    pub scored: Vec<WindowScore>,
    pub unscored: usize,
}

/// Inverse-frequency-weighted distance
/// `sqrt(sum_i weight_i (actual_i - predicted_i)^2)` between two vectors in
/// count space. With uniform weights this is the plain Euclidean distance.
pub fn weighted_distance(
    predicted: &[f64],
    actual: &[f64],
    idf: &IdfWeights,
) -> Result<f64, LstmError> {
    if predicted.len() != actual.len() || predicted.len() != idf.dim() {
        return Err(LstmError::DimensionMismatch {
            expected: idf.dim(),
            got: predicted.len().max(actual.len()),
        });
    }
    let sum: f64 = predicted
        .iter()
        .zip(actual)
        .zip(&idf.weights)
        .map(|((p, a), w)| w * (a - p) * (a - p))
        .sum();
    Ok(sum.sqrt())
}

/// Upper empirical `(1 - p)`-quantile of the distances: with `pos = (1-p) m`
/// the threshold is the order statistic at 1-based rank `floor(pos) + 1`
/// (the higher of the two straddling order statistics), capped at the
/// maximum. Guarantees an exceedance rate of at most `p` on the sample.
pub fn threshold_from_distances(distances: &[f64], p: f64) -> Result<f64, LstmError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(LstmError::BadParam(format!("p must be in (0, 1), got {p}")));
    }
    if distances.is_empty() {
        return Err(LstmError::InsufficientData(
            "threshold calibration needs at least one distance".into(),
        ));
    }
    let mut sorted = distances.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let pos = (1.0 - p) * m as f64;
    let idx = (pos.floor() as usize).min(m - 1);
    Ok(sorted[idx].max(THRESHOLD_FLOOR))
}

struct Dataset {
    /// Scaled rows per session.
    scaled: Vec<Vec<DVector<f64>>>,
    /// Raw counts per session, as f64.
    raw: Vec<Vec<Vec<f64>>>,
    /// (session, start) of each length `delta + 1` subsequence, stride 1,
    /// never crossing a session boundary. The target window is
    /// `start + delta`.
    samples: Vec<(usize, usize)>,
}

fn build_dataset(series: &WindowedSeries, scaler: &Scaler, delta: usize) -> Dataset {
    let mut scaled = Vec::with_capacity(series.sessions.len());
    let mut raw = Vec::with_capacity(series.sessions.len());
    let mut samples = Vec::new();
    for (sess_idx, session) in series.sessions.iter().enumerate() {
        let rows: Vec<DVector<f64>> = session
            .vectors
            .iter()
            .map(|v| DVector::from_vec(scaler.transform_counts(&v.counts)))
            .collect();
        let counts: Vec<Vec<f64>> = session
            .vectors
            .iter()
            .map(|v| v.counts.iter().map(|&c| f64::from(c)).collect())
            .collect();
        if rows.len() > delta {
            for start in 0..=(rows.len() - delta - 1) {
                samples.push((sess_idx, start));
            }
        }
        scaled.push(rows);
        raw.push(counts);
    }
    Dataset {
        scaled,
        raw,
        samples,
    }
}

/// Per-sample MSE (mean over dimensions, matching the training loss).
fn sample_mse(
    params: &Params,
    dataset: &Dataset,
    sample: (usize, usize),
    delta: usize,
    hidden: usize,
) -> f64 {
    let (sess, start) = sample;
    let seq = &dataset.scaled[sess][start..start + delta];
    let target = &dataset.scaled[sess][start + delta];
    let pred = predict(params, seq, hidden);
    (pred - target).norm_squared() / target.len() as f64
}

fn mean_mse(
    params: &Params,
    dataset: &Dataset,
    samples: &[(usize, usize)],
    delta: usize,
    hidden: usize,
) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples
        .iter()
        .map(|&s| sample_mse(params, dataset, s, delta, hidden))
        .sum::<f64>()
        / samples.len() as f64
}

struct AdamState {
    m: Params,
    v: Params,
    step: u64,
}

impl AdamState {
    fn new(input_dim: usize, hidden: usize) -> Self {
        Self {
            m: Params::zeros(input_dim, hidden),
            v: Params::zeros(input_dim, hidden),
            step: 0,
        }
    }

    fn update(&mut self, params: &mut Params, grads: &Params, hp: &LstmHyperparams) {
        self.step += 1;
        let bias1 = 1.0 - hp.adam_beta1.powi(self.step as i32);
        let bias2 = 1.0 - hp.adam_beta2.powi(self.step as i32);
        let theta = params.slices_mut();
        let g = grads.slices();
        let m = self.m.slices_mut();
        let v = self.v.slices_mut();
        for (((theta, g), m), v) in theta.into_iter().zip(g).zip(m).zip(v) {
            for (((theta, &g), m), v) in theta.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut())
            {
                *m = hp.adam_beta1 * *m + (1.0 - hp.adam_beta1) * g;
                *v = hp.adam_beta2 * *v + (1.0 - hp.adam_beta2) * g * g;
                let m_hat = *m / bias1;
                let v_hat = *v / bias2;
                *theta -= hp.learning_rate * m_hat / (v_hat.sqrt() + hp.adam_eps);
            }
        }
    }
}

/// Trains the predictor on a legitimate series.
///
/// Fits a min-max scaler and the IDF weights on the series, builds stride-1
/// subsequences per session, holds out the chronological last
/// `validation_split` of them, and runs mini-batch BPTT with Adam and
/// global-norm gradient clipping. Batch order is reshuffled each epoch from
/// the seeded generator, so equal seeds give bit-identical weights.
///
/// The returned model has no threshold yet; calibrate one with
/// [`LstmPredictor::calibrate_threshold`] or from the report's validation
/// distances via [`threshold_from_distances`].
pub fn train_lstm(
    series: &WindowedSeries,
    hp: &LstmHyperparams,
) -> Result<(LstmPredictor, TrainingReport), LstmError> {
    hp.validate()?;
    let map_data_err = |e: ingest::IngestError| LstmError::InsufficientData(e.to_string());
    let scaler = Scaler::fit(series, ScalerKind::MinMax).map_err(map_data_err)?;
    let idf = ingest::compute_idf_weights(series).map_err(map_data_err)?;

    let input_dim = series.dim();
    let hidden = hp.hidden_units;
    let delta = hp.delta;
    let dataset = build_dataset(series, &scaler, delta);
    if dataset.samples.is_empty() {
        return Err(LstmError::InsufficientData(format!(
            "no session offers a full subsequence of length delta + 1 = {}",
            delta + 1
        )));
    }

    let n_val = ((dataset.samples.len() as f64) * hp.validation_split).floor() as usize;
    let n_train = dataset.samples.len() - n_val;
    if n_train == 0 {
        return Err(LstmError::InsufficientData(
            "validation split leaves no training subsequences".into(),
        ));
    }
    let train_samples = &dataset.samples[..n_train];
    let val_samples = &dataset.samples[n_train..];

    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut params = Params::init(input_dim, hidden, &mut rng);
    let mut adam = AdamState::new(input_dim, hidden);

    let mut epochs = Vec::with_capacity(hp.epochs);
    let mut order: Vec<(usize, usize)> = train_samples.to_vec();
    for epoch in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(hp.batch_size) {
            let mut grads = Params::zeros(input_dim, hidden);
            let mut batch_loss = 0.0;
            for &(sess, start) in batch {
                let seq = &dataset.scaled[sess][start..start + delta];
                let target = &dataset.scaled[sess][start + delta];
                let (caches, h_last) = forward_steps(&params, seq, hidden);
                let mut pred = params.head_b.clone();
                pred.gemv(1.0, &params.head_w, &h_last, 1.0);
                let err = pred - target;
                batch_loss += err.norm_squared() / input_dim as f64;
                let dy = err * (2.0 / input_dim as f64);
                backward(&params, &caches, &h_last, &dy, &mut grads);
            }
            grads.scale(1.0 / batch.len() as f64);
            let norm = grads.global_norm();
            if norm > hp.clip_norm {
                grads.scale(hp.clip_norm / norm);
            }
            adam.update(&mut params, &grads, hp);
            epoch_loss += batch_loss;
        }
        let train_mse = epoch_loss / train_samples.len() as f64;
        let val_mse = (!val_samples.is_empty())
            .then(|| mean_mse(&params, &dataset, val_samples, delta, hidden));
        if !train_mse.is_finite() || val_mse.is_some_and(|v| !v.is_finite()) {
            return Err(LstmError::TrainingDiverged { epoch });
        }
        epochs.push(EpochStats { train_mse, val_mse });
    }

    if !params.is_finite() {
        return Err(LstmError::TrainingDiverged { epoch: hp.epochs });
    }

    let mut validation_distances = Vec::with_capacity(val_samples.len());
    for &(sess, start) in val_samples {
        let seq = &dataset.scaled[sess][start..start + delta];
        let pred = predict(&params, seq, hidden);
        let pred_counts = scaler.invert(pred.as_slice());
        let actual = &dataset.raw[sess][start + delta];
        validation_distances.push(weighted_distance(&pred_counts, actual, &idf)?);
    }

    Ok((
        LstmPredictor {
            input_dim,
            hidden,
            params,
            scaler,
            idf,
            threshold: None,
            hyperparams: *hp,
        },
        TrainingReport {
            epochs,
            validation_distances,
        },
    ))
}

impl LstmPredictor {
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn idf(&self) -> &IdfWeights {
        &self.idf
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn set_threshold(&mut self, threshold: f64) {
        self.threshold = Some(threshold.max(THRESHOLD_FLOOR));
    }

    pub fn hyperparams(&self) -> &LstmHyperparams {
        &self.hyperparams
    }

    /// Predicts the next scaled window from exactly `delta` scaled windows.
    /// Deterministic: the recurrence starts from zero hidden and cell state.
    pub fn predict_next(&self, seq_scaled: &[Vec<f64>]) -> Result<Vec<f64>, LstmError> {
        if seq_scaled.len() != self.hyperparams.delta {
            return Err(LstmError::BadParam(format!(
                "sequence must have exactly delta = {} windows, got {}",
                self.hyperparams.delta,
                seq_scaled.len()
            )));
        }
        let seq: Vec<DVector<f64>> = seq_scaled
            .iter()
            .map(|row| {
                if row.len() != self.input_dim {
                    Err(LstmError::DimensionMismatch {
                        expected: self.input_dim,
                        got: row.len(),
                    })
                } else {
                    Ok(DVector::from_column_slice(row))
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(predict(&self.params, &seq, self.hidden).as_slice().to_vec())
    }

    /// Calibrates the detection threshold on a legitimate series: the upper
    /// `(1 - p)`-quantile of the prediction distances over its scoreable
    /// windows. Stores and returns the threshold.
    pub fn calibrate_threshold(
        &mut self,
        legit_validation: &WindowedSeries,
        p: f64,
    ) -> Result<f64, LstmError> {
        let scores = self.score_series(legit_validation)?;
        let distances: Vec<f64> = scores.scored.iter().map(|w| w.score).collect();
        let threshold = threshold_from_distances(&distances, p)?;
        self.threshold = Some(threshold);
        Ok(threshold)
    }

    /// Scores every window that has `delta` predecessors in its session:
    /// the weighted distance between the inverse-scaled prediction and the
    /// observed counts. Windows are flagged when the score exceeds the
    /// calibrated threshold (never flagged if no threshold is set).
    pub fn score_series(&self, series: &WindowedSeries) -> Result<SeriesScores, LstmError> {
        if series.dim() != self.input_dim {
            return Err(LstmError::DimensionMismatch {
                expected: self.input_dim,
                got: series.dim(),
            });
        }
        let delta = self.hyperparams.delta;
        let mut scored = Vec::new();
        let mut unscored = 0usize;
        for session in &series.sessions {
            let rows: Vec<DVector<f64>> = session
                .vectors
                .iter()
                .map(|v| DVector::from_vec(self.scaler.transform_counts(&v.counts)))
                .collect();
            unscored += rows.len().min(delta);
            for t in delta..rows.len() {
                let pred = predict(&self.params, &rows[t - delta..t], self.hidden);
                let pred_counts = self.scaler.invert(pred.as_slice());
                let actual: Vec<f64> = session.vectors[t]
                    .counts
                    .iter()
                    .map(|&c| f64::from(c))
                    .collect();
                let score = weighted_distance(&pred_counts, &actual, &self.idf)?;
                scored.push(WindowScore {
                    session_id: session.session_id,
                    window_index: t,
                    label: session.labels[t],
                    score,
                    flag: self.threshold.is_some_and(|t| score > t),
                });
            }
        }
        Ok(SeriesScores { scored, unscored })
    }

    pub(crate) fn params(&self) -> &Params {
        &self.params
    }

    pub(crate) fn from_parts(
        params: Params,
        scaler: Scaler,
        idf: IdfWeights,
        threshold: Option<f64>,
        hyperparams: LstmHyperparams,
    ) -> Result<Self, LstmError> {
        let input_dim = params.head_w.nrows();
        let hidden = params.head_w.ncols();
        if !params.is_finite() {
            return Err(LstmError::BadParam("weights must be finite".into()));
        }
        if scaler.dim() != input_dim || idf.dim() != input_dim {
            return Err(LstmError::DimensionMismatch {
                expected: input_dim,
                got: scaler.dim(),
            });
        }
        Ok(Self {
            input_dim,
            hidden,
            params,
            scaler,
            idf,
            threshold,
            hyperparams,
        })
    }
}

/// Result of comparing analytic BPTT gradients against central finite
/// differences for every parameter scalar of a small random model.
#[derive(Debug, Clone)]
pub struct GradientCheckReport {
    pub max_relative_error: f64,
    pub worst_tensor: String,
    pub parameters_checked: usize,
}

/// Analytic-vs-numeric gradient check on a freshly initialized model with
/// random inputs. The batch loss is the mean over samples of the
/// per-dimension MSE, exactly as in training (clipping excluded: it is a
/// training-step transform, not part of the loss).
pub fn gradient_check(
    input_dim: usize,
    hidden: usize,
    delta: usize,
    n_samples: usize,
    seed: u64,
    epsilon: f64,
) -> GradientCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = Params::init(input_dim, hidden, &mut rng);
    // perturb biases too so no gradient path sits at exactly zero input
    for slice in params.slices_mut() {
        for x in slice {
            *x += rng.gen_range(-0.05..0.05);
        }
    }

    let samples: Vec<(Vec<DVector<f64>>, DVector<f64>)> = (0..n_samples)
        .map(|_| {
            let seq = (0..delta)
                .map(|_| DVector::from_fn(input_dim, |_, _| rng.gen_range(-1.0..1.0)))
                .collect();
            let target = DVector::from_fn(input_dim, |_, _| rng.gen_range(-1.0..1.0));
            (seq, target)
        })
        .collect();

    let batch_loss = |params: &Params| -> f64 {
        samples
            .iter()
            .map(|(seq, target)| {
                let pred = predict(params, seq, hidden);
                (pred - target).norm_squared() / input_dim as f64
            })
            .sum::<f64>()
            / n_samples as f64
    };

    let mut analytic = Params::zeros(input_dim, hidden);
    for (seq, target) in &samples {
        let (caches, h_last) = forward_steps(&params, seq, hidden);
        let mut pred = params.head_b.clone();
        pred.gemv(1.0, &params.head_w, &h_last, 1.0);
        let dy = (pred - target) * (2.0 / input_dim as f64);
        backward(&params, &caches, &h_last, &dy, &mut analytic);
    }
    analytic.scale(1.0 / n_samples as f64);

    let mut max_relative_error: f64 = 0.0;
    let mut worst_tensor = String::new();
    let mut parameters_checked = 0usize;
    for (tensor_idx, name) in TENSOR_NAMES.iter().enumerate() {
        let len = analytic.slices()[tensor_idx].len();
        for elem in 0..len {
            let original = params.slices()[tensor_idx][elem];
            params.slices_mut()[tensor_idx][elem] = original + epsilon;
            let plus = batch_loss(&params);
            params.slices_mut()[tensor_idx][elem] = original - epsilon;
            let minus = batch_loss(&params);
            params.slices_mut()[tensor_idx][elem] = original;

            let numeric = (plus - minus) / (2.0 * epsilon);
            let exact = analytic.slices()[tensor_idx][elem];
            let rel = (exact - numeric).abs() / exact.abs().max(numeric.abs()).max(1e-8);
            if rel > max_relative_error {
                max_relative_error = rel;
                worst_tensor = name.to_string();
            }
            parameters_checked += 1;
        }
    }

    GradientCheckReport {
        max_relative_error,
        worst_tensor,
        parameters_checked,
    }
}

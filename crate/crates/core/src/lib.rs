//! Unsupervised anomaly detection for per-application system-call traces.
//!
//! The pipeline turns raw timestamped syscall events into fixed-interval
//! frequency vectors and learns what "normal" looks like from legitimate
//! traffic only. Three detectors score new windows:
//!
//! - [`pca`] — low-rank Gaussian density estimate; score is the negative
//!   log-likelihood of a window,
//! - [`ocsvm`] — one-class SVM with an RBF kernel; score is the distance
//!   past the learned boundary,
//! - [`lstm`] — a recurrent next-window predictor; score is the
//!   inverse-frequency-weighted distance between prediction and observation.
//!
//! [`workload`] generates deterministic labeled traces for experiments and
//! [`eval`] computes ROC curves, AUC, and TPR at fixed FPR targets.

pub mod eval;
pub mod ingest;
pub mod lstm;
pub mod ocsvm;
pub mod pca;
pub mod persist;
pub mod pipeline;
pub mod trace;
pub mod workload;

pub use trace::{
    build_vocabulary, FrequencyVector, LabelSpan, SessionWindows, SyscallEvent, SyscallVocabulary,
    WindowedSeries,
};

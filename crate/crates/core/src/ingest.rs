//! Trace and label parsing, windowizing, feature scaling, and
//! inverse-frequency weights.
//!
//! File formats (UTF-8, LF, decimal integers):
//!
//! - trace CSV: header `session_id,timestamp_ns,syscall`, one event per line,
//!   syscall names matching `[A-Za-z0-9_]+`;
//! - label CSV: header `session_id,start_ns,end_ns,kind`, half-open
//!   `[start, end)` intervals.
//!
//! Readers tolerate a missing header; writers always emit it.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::{
    FrequencyVector, LabelSpan, SessionWindows, SyscallEvent, SyscallVocabulary, WindowedSeries,
};

const TRACE_HEADER: &str = "session_id,timestamp_ns,syscall";
const LABEL_HEADER: &str = "session_id,start_ns,end_ns,kind";

/// Smallest standard deviation / min-max range a scaler will divide by.
pub const SCALE_FLOOR: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: malformed record: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: timestamp not monotone within session {session_id}")]
    NonMonotoneTimestamp { session_id: u32, line: usize },
    #[error("input contains no events")]
    EmptyInput,
    #[error("line {line}: invalid span: {reason}")]
    InvalidSpan { line: usize, reason: String },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

fn is_syscall_token(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

fn is_kind_token(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

fn malformed(line: usize, reason: impl Into<String>) -> IngestError {
    IngestError::MalformedLine {
        line,
        reason: reason.into(),
    }
}

/// Parses a trace CSV byte stream into events grouped by session id
/// (ascending), each session in ascending timestamp order.
///
/// Any malformed line is a hard error carrying its 1-based line number.
/// Timestamps within one session must be non-decreasing in file order.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Vec<SyscallEvent>, IngestError> {
    let mut sessions: BTreeMap<u32, Vec<SyscallEvent>> = BTreeMap::new();
    let mut last_ts: BTreeMap<u32, u64> = BTreeMap::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if idx == 0 && line == TRACE_HEADER {
            continue;
        }

        let mut parts = line.split(',');
        let (sid, ts, name) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c), None) => (a, b, c),
            _ => return Err(malformed(line_no, "expected 3 comma-separated fields")),
        };
        let session_id: u32 = sid
            .parse()
            .map_err(|_| malformed(line_no, format!("bad session_id {sid:?}")))?;
        let timestamp_ns: u64 = ts
            .parse()
            .map_err(|_| malformed(line_no, format!("bad timestamp_ns {ts:?}")))?;
        if !is_syscall_token(name) {
            return Err(malformed(line_no, format!("bad syscall name {name:?}")));
        }

        if let Some(&prev) = last_ts.get(&session_id) {
            if timestamp_ns < prev {
                return Err(IngestError::NonMonotoneTimestamp {
                    session_id,
                    line: line_no,
                });
            }
        }
        last_ts.insert(session_id, timestamp_ns);
        sessions
            .entry(session_id)
            .or_default()
            .push(SyscallEvent::new(session_id, timestamp_ns, name));
    }

    if sessions.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    Ok(sessions.into_values().flatten().collect())
}

/// Parses a label CSV byte stream. An empty file is a valid all-legitimate
/// trace and yields an empty list.
pub fn parse_labels<R: BufRead>(reader: R) -> Result<Vec<LabelSpan>, IngestError> {
    let mut spans = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if idx == 0 && line == LABEL_HEADER {
            continue;
        }

        let mut parts = line.split(',');
        let (sid, start, end, kind) = match (
            parts.next(),
            parts.next(),
            parts.next(),
            parts.next(),
            parts.next(),
        ) {
            (Some(a), Some(b), Some(c), Some(d), None) => (a, b, c, d),
            _ => return Err(malformed(line_no, "expected 4 comma-separated fields")),
        };
        let session_id: u32 = sid
            .parse()
            .map_err(|_| malformed(line_no, format!("bad session_id {sid:?}")))?;
        let start_ns: u64 = start
            .parse()
            .map_err(|_| malformed(line_no, format!("bad start_ns {start:?}")))?;
        let end_ns: u64 = end
            .parse()
            .map_err(|_| malformed(line_no, format!("bad end_ns {end:?}")))?;
        if !is_kind_token(kind) {
            return Err(malformed(line_no, format!("bad kind {kind:?}")));
        }
        if start_ns >= end_ns {
            return Err(IngestError::InvalidSpan {
                line: line_no,
                reason: format!("start {start_ns} must be < end {end_ns}"),
            });
        }
        spans.push(LabelSpan {
            session_id,
            start_ns,
            end_ns,
            kind: kind.to_string(),
        });
    }
    Ok(spans)
}

/// Writes events in the trace CSV format, header included.
pub fn write_trace_csv<W: Write>(events: &[SyscallEvent], mut w: W) -> io::Result<()> {
    writeln!(w, "{TRACE_HEADER}")?;
    for e in events {
        writeln!(w, "{},{},{}", e.session_id, e.timestamp_ns, e.syscall)?;
    }
    Ok(())
}

/// Writes spans in the label CSV format, header included.
pub fn write_labels_csv<W: Write>(spans: &[LabelSpan], mut w: W) -> io::Result<()> {
    writeln!(w, "{LABEL_HEADER}")?;
    for s in spans {
        writeln!(w, "{},{},{},{}", s.session_id, s.start_ns, s.end_ns, s.kind)?;
    }
    Ok(())
}

/// Buckets events into fixed-interval frequency vectors per session.
///
/// Window `t` of a session counts events with timestamps in
/// `[t * interval_ns, (t + 1) * interval_ns)`. Windows tile each session from
/// zero through its last event with no gaps; windows with no events are all
/// zeros. A window is attack-labeled iff it overlaps any span belonging to
/// its session. Windows never cross session boundaries.
///
/// Events must be sorted per session (as produced by [`parse_trace`]).
/// `interval_ns` must be positive.
pub fn windowize(
    events: &[SyscallEvent],
    vocabulary: &Arc<SyscallVocabulary>,
    interval_ns: u64,
    spans: &[LabelSpan],
) -> WindowedSeries {
    assert!(interval_ns > 0, "interval_ns must be positive");
    let dim = vocabulary.dim();

    let mut by_session: BTreeMap<u32, Vec<&SyscallEvent>> = BTreeMap::new();
    for e in events {
        by_session.entry(e.session_id).or_default().push(e);
    }

    let mut sessions = Vec::with_capacity(by_session.len());
    for (session_id, events) in by_session {
        let last_ts = events.iter().map(|e| e.timestamp_ns).max().unwrap_or(0);
        let num_windows = (last_ts / interval_ns) as usize + 1;

        let mut vectors: Vec<FrequencyVector> = (0..num_windows)
            .map(|window_index| FrequencyVector {
                session_id,
                window_index,
                counts: vec![0; dim],
            })
            .collect();
        for e in &events {
            let w = (e.timestamp_ns / interval_ns) as usize;
            vectors[w].counts[vocabulary.dimension_of(&e.syscall)] += 1;
        }

        let session_spans: Vec<&LabelSpan> = spans
            .iter()
            .filter(|s| s.session_id == session_id)
            .collect();
        let labels = (0..num_windows as u64)
            .map(|t| {
                let start = t * interval_ns;
                let end = start + interval_ns;
                session_spans.iter().any(|s| s.overlaps(start, end))
            })
            .collect();

        sessions.push(SessionWindows {
            session_id,
            vectors,
            labels,
        });
    }

    WindowedSeries {
        interval_ns,
        vocabulary: Arc::clone(vocabulary),
        sessions,
    }
}

/// Writes the windowed-series debug dump:
/// `session_id,window_index,label,<names...>,OOV` then integer counts.
pub fn write_windowed_csv<W: Write>(series: &WindowedSeries, mut w: W) -> io::Result<()> {
    write!(w, "session_id,window_index,label")?;
    for name in series.vocabulary.names() {
        write!(w, ",{name}")?;
    }
    writeln!(w, ",OOV")?;
    for (vector, label) in series.iter_windows() {
        write!(
            w,
            "{},{},{}",
            vector.session_id,
            vector.window_index,
            u8::from(label)
        )?;
        for c in &vector.counts {
            write!(w, ",{c}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Feature-scaling mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalerKind {
    None,
    Standardize,
    MinMax,
}

/// Per-dimension affine transform `(x - offset) / scale` fitted on training
/// windows. Scale entries are floored at [`SCALE_FLOOR`], so applying and
/// inverting round-trips non-degenerate dimensions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    kind: ScalerKind,
    offset: Vec<f64>,
    scale: Vec<f64>,
}

impl Scaler {
    /// Identity transform of the given dimension.
    pub fn identity(dim: usize) -> Self {
        Self {
            kind: ScalerKind::None,
            offset: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Fits scaling parameters on the training windows.
    ///
    /// `Standardize` maps training data to mean 0 / population std 1 per
    /// dimension and needs at least 2 windows; `MinMax` maps training data
    /// into `[0, 1]` and needs at least 1.
    pub fn fit(training: &WindowedSeries, kind: ScalerKind) -> Result<Self, IngestError> {
        let dim = training.dim();
        let n = training.num_windows();
        match kind {
            ScalerKind::None => Ok(Self::identity(dim)),
            ScalerKind::Standardize => {
                if n < 2 {
                    return Err(IngestError::InsufficientData(format!(
                        "standardize needs >= 2 training windows, got {n}"
                    )));
                }
                let mut mean = vec![0.0; dim];
                for (v, _) in training.iter_windows() {
                    for (m, &c) in mean.iter_mut().zip(&v.counts) {
                        *m += f64::from(c);
                    }
                }
                for m in &mut mean {
                    *m /= n as f64;
                }
                let mut var = vec![0.0; dim];
                for (v, _) in training.iter_windows() {
                    for ((s, &c), m) in var.iter_mut().zip(&v.counts).zip(&mean) {
                        let d = f64::from(c) - m;
                        *s += d * d;
                    }
                }
                let scale = var
                    .iter()
                    .map(|s| (s / n as f64).sqrt().max(SCALE_FLOOR))
                    .collect();
                Ok(Self {
                    kind,
                    offset: mean,
                    scale,
                })
            }
            ScalerKind::MinMax => {
                if n < 1 {
                    return Err(IngestError::InsufficientData(
                        "minmax needs >= 1 training window".into(),
                    ));
                }
                let mut lo = vec![f64::INFINITY; dim];
                let mut hi = vec![f64::NEG_INFINITY; dim];
                for (v, _) in training.iter_windows() {
                    for (i, &c) in v.counts.iter().enumerate() {
                        let c = f64::from(c);
                        lo[i] = lo[i].min(c);
                        hi[i] = hi[i].max(c);
                    }
                }
                let scale = lo
                    .iter()
                    .zip(&hi)
                    .map(|(l, h)| (h - l).max(SCALE_FLOOR))
                    .collect();
                Ok(Self {
                    kind,
                    offset: lo,
                    scale,
                })
            }
        }
    }

    pub fn kind(&self) -> ScalerKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    /// Scales one real-valued row.
    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        debug_assert_eq!(row.len(), self.dim());
        row.iter()
            .zip(&self.offset)
            .zip(&self.scale)
            .map(|((x, o), s)| (x - o) / s)
            .collect()
    }

    /// Scales one count vector.
    pub fn transform_counts(&self, counts: &[u32]) -> Vec<f64> {
        let row: Vec<f64> = counts.iter().map(|&c| f64::from(c)).collect();
        self.transform(&row)
    }

    /// Inverse of [`Self::transform`].
    pub fn invert(&self, row: &[f64]) -> Vec<f64> {
        debug_assert_eq!(row.len(), self.dim());
        row.iter()
            .zip(&self.offset)
            .zip(&self.scale)
            .map(|((x, o), s)| x * s + o)
            .collect()
    }
}

/// Applies a scaler to a whole series, preserving session structure and
/// labels.
pub fn scale_series(scaler: &Scaler, series: &WindowedSeries) -> Vec<ScaledSession> {
    series
        .sessions
        .iter()
        .map(|s| ScaledSession {
            session_id: s.session_id,
            rows: s
                .vectors
                .iter()
                .map(|v| scaler.transform_counts(&v.counts))
                .collect(),
            labels: s.labels.clone(),
        })
        .collect()
}

/// One session of scaled, real-valued windows.
#[derive(Debug, Clone)]
pub struct ScaledSession {
    pub session_id: u32,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

/// Inverse-frequency weights over the vocabulary, fitted on training
/// windows-as-documents:
///
/// `weight[i] = ln((1 + N) / (1 + n_i)) + 1`
///
/// where `N` is the number of training windows and `n_i` the number of
/// windows in which dimension `i` has a non-zero count. Weights are strictly
/// positive and non-increasing in `n_i`; a syscall present in every window
/// gets weight exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdfWeights {
    pub weights: Vec<f64>,
    pub num_training_windows: usize,
}

impl IdfWeights {
    /// All-ones weights; turns the weighted distance into plain Euclidean.
    pub fn uniform(dim: usize) -> Self {
        Self {
            weights: vec![1.0; dim],
            num_training_windows: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }
}

/// Computes smoothed inverse-document-frequency weights from training
/// windows. Needs at least one window.
pub fn compute_idf_weights(training: &WindowedSeries) -> Result<IdfWeights, IngestError> {
    let n = training.num_windows();
    if n == 0 {
        return Err(IngestError::InsufficientData(
            "idf weights need >= 1 training window".into(),
        ));
    }
    let dim = training.dim();
    let mut present = vec![0usize; dim];
    for (v, _) in training.iter_windows() {
        for (p, &c) in present.iter_mut().zip(&v.counts) {
            if c > 0 {
                *p += 1;
            }
        }
    }
    let weights = present
        .iter()
        .map(|&ni| ((1.0 + n as f64) / (1.0 + ni as f64)).ln() + 1.0)
        .collect();
    Ok(IdfWeights {
        weights,
        num_training_windows: n,
    })
}

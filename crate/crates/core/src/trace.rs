//! Core domain types: syscall events, the frequency-vector vocabulary,
//! ground-truth label spans, and windowed series.
//!
//! Everything here is immutable after construction and safe to share
//! read-only across scoring threads.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use sha2::{Digest, Sha256};

/// One monitored system call.
///
/// Timestamps are nanoseconds since the start of the event's session; events
/// from different sessions are independent timelines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyscallEvent {
    pub session_id: u32,
    pub timestamp_ns: u64,
    /// Case-sensitive opaque syscall name.
    pub syscall: String,
}

impl SyscallEvent {
    pub fn new(session_id: u32, timestamp_ns: u64, syscall: impl Into<String>) -> Self {
        Self {
            session_id,
            timestamp_ns,
            syscall: syscall.into(),
        }
    }
}

/// Stable mapping from syscall names to feature dimensions.
///
/// Names observed in training occupy dimensions `0..s` in lexicographic
/// order; dimension `s` is reserved for names never seen in training, so the
/// feature length is `s + 1`. The mapping is frozen once built: looking up an
/// unknown name returns the out-of-vocabulary dimension instead of failing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyscallVocabulary {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl SyscallVocabulary {
    /// Builds a vocabulary from an arbitrary collection of names.
    /// Duplicates are dropped and the result is sorted, so the same name
    /// multiset always yields the same vocabulary.
    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort_unstable();
        names.dedup();
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Self { names, index }
    }

    /// Known names in dimension order (excludes the OOV slot).
    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Dimension reserved for out-of-vocabulary names.
    pub fn oov_index(&self) -> usize {
        self.names.len()
    }

    /// Feature-vector length, including the OOV dimension.
    pub fn dim(&self) -> usize {
        self.names.len() + 1
    }

    /// Dimension for `name`; unknown names map to [`Self::oov_index`].
    pub fn dimension_of(&self, name: &str) -> usize {
        self.index
            .get(name)
            .copied()
            .unwrap_or_else(|| self.oov_index())
    }

    /// Hex SHA-256 over the ordered name list. Used to bind serialized
    /// models to the vocabulary they were trained with.
    pub fn sha256(&self) -> String {
        let mut hasher = Sha256::new();
        for name in &self.names {
            hasher.update(name.as_bytes());
            hasher.update(b"\n");
        }
        let digest = hasher.finalize();
        let mut out = String::with_capacity(64);
        for byte in digest {
            let _ = write!(out, "{byte:02x}");
        }
        out
    }
}

/// Builds the feature vocabulary from training events: distinct names,
/// sorted, plus the reserved OOV slot.
pub fn build_vocabulary(training_events: &[SyscallEvent]) -> SyscallVocabulary {
    SyscallVocabulary::from_names(training_events.iter().map(|e| e.syscall.clone()))
}

/// Per-window syscall counts (the feature vector for one time interval).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyVector {
    pub session_id: u32,
    pub window_index: usize,
    /// One count per vocabulary dimension, OOV last. An empty window is all
    /// zeros.
    pub counts: Vec<u32>,
}

/// Ground-truth attack interval, half-open `[start_ns, end_ns)`, tagged with
/// the attack-script name that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSpan {
    pub session_id: u32,
    pub start_ns: u64,
    pub end_ns: u64,
    pub kind: String,
}

impl LabelSpan {
    /// Non-empty intersection with the half-open interval `[start, end)`.
    pub fn overlaps(&self, start_ns: u64, end_ns: u64) -> bool {
        self.start_ns < end_ns && start_ns < self.end_ns
    }
}

/// Windows of one session: consecutive, non-overlapping, tiling the session
/// span from zero with no gaps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionWindows {
    pub session_id: u32,
    pub vectors: Vec<FrequencyVector>,
    /// `labels[t]` is true iff window `t` overlaps any label span of this
    /// session.
    pub labels: Vec<bool>,
}

impl SessionWindows {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }
}

/// Ordered frequency vectors for every session of a trace, all built against
/// one vocabulary and one window length.
#[derive(Debug, Clone)]
pub struct WindowedSeries {
    pub interval_ns: u64,
    pub vocabulary: Arc<SyscallVocabulary>,
    pub sessions: Vec<SessionWindows>,
}

impl WindowedSeries {
    /// Feature dimension, including OOV.
    pub fn dim(&self) -> usize {
        self.vocabulary.dim()
    }

    /// Total window count across sessions.
    pub fn num_windows(&self) -> usize {
        self.sessions.iter().map(SessionWindows::len).sum()
    }

    /// All windows in session order, paired with their attack label.
    pub fn iter_windows(&self) -> impl Iterator<Item = (&FrequencyVector, bool)> {
        self.sessions
            .iter()
            .flat_map(|s| s.vectors.iter().zip(s.labels.iter().copied()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn events(names: &[&str]) -> Vec<SyscallEvent> {
        names
            .iter()
            .enumerate()
            .map(|(i, n)| SyscallEvent::new(0, i as u64 * 100, *n))
            .collect()
    }

    #[test]
    fn vocabulary_dedups_and_sorts() {
        let vocab = build_vocabulary(&events(&["open", "close", "open"]));
        assert_eq!(vocab.names(), ["close", "open"]);
        assert_eq!(vocab.dim(), 3);
        assert_eq!(vocab.oov_index(), 2);
    }

    #[test]
    fn empty_vocabulary_keeps_oov_slot() {
        let vocab = build_vocabulary(&[]);
        assert!(vocab.names().is_empty());
        assert_eq!(vocab.dim(), 1);
        assert_eq!(vocab.dimension_of("anything"), 0);
    }

    #[test]
    fn vocabulary_from_worked_example() {
        // futex,futex,open,write,close,open,read,close
        let vocab = build_vocabulary(&events(&[
            "futex", "futex", "open", "write", "close", "open", "read", "close",
        ]));
        assert_eq!(vocab.names(), ["close", "futex", "open", "read", "write"]);
        assert_eq!(vocab.dim(), 6);
    }

    #[test]
    fn vocabulary_is_order_independent() {
        let forward = build_vocabulary(&events(&["write", "read", "open"]));
        let backward = build_vocabulary(&events(&["open", "write", "read", "write"]));
        assert_eq!(forward, backward);
        assert_eq!(forward.sha256(), backward.sha256());
    }

    #[test]
    fn unknown_names_map_to_oov() {
        let vocab = SyscallVocabulary::from_names(["read", "write"]);
        assert_eq!(vocab.dimension_of("read"), 0);
        assert_eq!(vocab.dimension_of("write"), 1);
        assert_eq!(vocab.dimension_of("mmap"), vocab.oov_index());
    }

    #[test]
    fn span_overlap_is_half_open() {
        let span = LabelSpan {
            session_id: 0,
            start_ns: 1_000,
            end_ns: 2_000,
            kind: "enum_network".into(),
        };
        assert!(span.overlaps(1_500, 1_600));
        assert!(span.overlaps(0, 1_001));
        assert!(!span.overlaps(2_000, 3_000)); // touching at end is empty
        assert!(!span.overlaps(0, 1_000)); // touching at start is empty
    }
}

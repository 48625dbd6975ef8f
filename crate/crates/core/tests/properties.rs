//! Property tests for the pipeline invariants: count conservation and label
//! correctness under windowizing, scaler round-trips, IDF monotonicity, ROC
//! geometry, and threshold calibration.

use std::sync::Arc;

use proptest::prelude::*;

use sentinel_core::eval::{auc, roc_curve, tpr_at_fpr};
use sentinel_core::ingest::{compute_idf_weights, windowize, Scaler, ScalerKind};
use sentinel_core::lstm::threshold_from_distances;
use sentinel_core::trace::{build_vocabulary, LabelSpan, SyscallEvent};

const NAMES: [&str; 6] = ["close", "futex", "open", "read", "stat", "write"];

fn arb_events() -> impl Strategy<Value = Vec<SyscallEvent>> {
    // up to 3 sessions, each with sorted timestamps in a small range
    prop::collection::vec(
        (
            0u32..3,
            prop::collection::vec((0u64..40_000, 0usize..NAMES.len()), 1..60),
        ),
        1..4,
    )
    .prop_map(|sessions| {
        // session ids may repeat across groups: merge and sort per session
        let mut merged: std::collections::BTreeMap<u32, Vec<(u64, usize)>> =
            std::collections::BTreeMap::new();
        for (session_id, raw) in sessions {
            merged.entry(session_id).or_default().extend(raw);
        }
        let mut events = Vec::new();
        for (session_id, mut stamps) in merged {
            stamps.sort();
            for (ts, name) in stamps {
                events.push(SyscallEvent::new(session_id, ts, NAMES[name]));
            }
        }
        events
    })
}

fn arb_spans() -> impl Strategy<Value = Vec<LabelSpan>> {
    prop::collection::vec((0u32..3, 0u64..40_000, 1u64..20_000, 0usize..3), 0..4).prop_map(
        |spans| {
            spans
                .into_iter()
                .map(|(session_id, start, len, kind)| LabelSpan {
                    session_id,
                    start_ns: start,
                    end_ns: start + len,
                    kind: ["enum_network", "hashdump", "env"][kind].to_string(),
                })
                .collect()
        },
    )
}

proptest! {
    #[test]
    fn windowize_conserves_counts_and_labels(
        events in arb_events(),
        spans in arb_spans(),
        interval in 1_000u64..10_000,
    ) {
        let vocab = Arc::new(build_vocabulary(&events));
        let series = windowize(&events, &vocab, interval, &spans);

        // count conservation per session and dimension
        for session in &series.sessions {
            let mut expected = vec![0u32; vocab.dim()];
            for e in events.iter().filter(|e| e.session_id == session.session_id) {
                expected[vocab.dimension_of(&e.syscall)] += 1;
            }
            let mut got = vec![0u32; vocab.dim()];
            for v in &session.vectors {
                for (g, c) in got.iter_mut().zip(&v.counts) {
                    *g += c;
                }
            }
            prop_assert_eq!(&got, &expected);

            // windows tile the session span with no gaps
            let last_ts = events
                .iter()
                .filter(|e| e.session_id == session.session_id)
                .map(|e| e.timestamp_ns)
                .max()
                .unwrap();
            prop_assert_eq!(session.vectors.len(), (last_ts / interval) as usize + 1);

            // label matches the interval-overlap oracle
            for (t, &label) in session.labels.iter().enumerate() {
                let (lo, hi) = (t as u64 * interval, (t as u64 + 1) * interval);
                let oracle = spans.iter().any(|s| {
                    s.session_id == session.session_id && s.start_ns < hi && lo < s.end_ns
                });
                prop_assert_eq!(label, oracle, "window {} of session {}", t, session.session_id);
            }
        }

        // every event is counted exactly once overall
        let total: u32 = series
            .iter_windows()
            .map(|(v, _)| v.counts.iter().sum::<u32>())
            .sum();
        prop_assert_eq!(total as usize, events.len());
    }

    #[test]
    fn scaler_round_trips_within_tolerance(
        events in arb_events(),
        kind_idx in 0usize..3,
        probe in prop::collection::vec(0u32..500, NAMES.len() + 1),
    ) {
        let vocab = Arc::new(build_vocabulary(&events));
        let series = windowize(&events, &vocab, 5_000, &[]);
        prop_assume!(series.num_windows() >= 2);

        let kind = [ScalerKind::None, ScalerKind::Standardize, ScalerKind::MinMax][kind_idx];
        let scaler = Scaler::fit(&series, kind).unwrap();
        let probe = &probe[..vocab.dim()];
        let row: Vec<f64> = probe.iter().map(|&c| f64::from(c)).collect();
        let back = scaler.invert(&scaler.transform(&row));
        for (a, b) in back.iter().zip(&row) {
            prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn idf_weights_decrease_with_document_frequency(events in arb_events()) {
        let vocab = Arc::new(build_vocabulary(&events));
        let series = windowize(&events, &vocab, 5_000, &[]);
        let idf = compute_idf_weights(&series).unwrap();

        let mut present = vec![0usize; vocab.dim()];
        for (v, _) in series.iter_windows() {
            for (p, &c) in present.iter_mut().zip(&v.counts) {
                if c > 0 {
                    *p += 1;
                }
            }
        }
        for i in 0..present.len() {
            prop_assert!(idf.weights[i] > 0.0);
            for j in 0..present.len() {
                if present[i] < present[j] {
                    prop_assert!(idf.weights[i] > idf.weights[j]);
                }
            }
        }
    }

    #[test]
    fn auc_is_invariant_under_monotone_transforms(
        scores in prop::collection::vec(-1_000i32..1_000, 2..60),
        labels in prop::collection::vec(any::<bool>(), 2..60),
    ) {
        let n = scores.len().min(labels.len());
        let scores: Vec<f64> = scores[..n].iter().map(|&s| f64::from(s) / 10.0).collect();
        let labels = &labels[..n];
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));

        let base = auc(&scores, labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&base));

        // strictly monotone transform: ties and order preserved
        let transformed: Vec<f64> = scores.iter().map(|s| (s / 50.0).exp() * 3.0 + 1.0).collect();
        let same = auc(&transformed, labels).unwrap();
        prop_assert!((base - same).abs() < 1e-12);

        // label swap mirrors the statistic
        let flipped: Vec<bool> = labels.iter().map(|l| !l).collect();
        let mirrored = auc(&scores, &flipped).unwrap();
        prop_assert!((base + mirrored - 1.0).abs() < 1e-12);
    }

    #[test]
    fn roc_curve_is_monotone_with_fixed_endpoints(
        scores in prop::collection::vec(-100i32..100, 2..60),
        labels in prop::collection::vec(any::<bool>(), 2..60),
    ) {
        let n = scores.len().min(labels.len());
        let scores: Vec<f64> = scores[..n].iter().map(|&s| f64::from(s)).collect();
        let labels = &labels[..n];
        prop_assume!(labels.iter().any(|&l| l) && labels.iter().any(|&l| !l));

        let points = roc_curve(&scores, labels).unwrap();
        prop_assert_eq!((points[0].fpr, points[0].tpr), (0.0, 0.0));
        let last = points.last().unwrap();
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for pair in points.windows(2) {
            prop_assert!(pair[1].fpr >= pair[0].fpr);
            prop_assert!(pair[1].tpr >= pair[0].tpr);
        }

        // tpr@fpr is the step function through those points
        let tpr = tpr_at_fpr(&scores, labels, 1.0).unwrap();
        prop_assert_eq!(tpr, 1.0);
    }

    #[test]
    fn threshold_exceedance_is_bounded_by_p(
        distances in prop::collection::vec(0.0f64..1_000.0, 1..300),
        p_millis in 1u32..500,
    ) {
        let p = f64::from(p_millis) / 1000.0;
        let t = threshold_from_distances(&distances, p).unwrap();
        prop_assert!(t > 0.0);
        let exceed = distances.iter().filter(|&&d| d > t).count();
        prop_assert!(exceed as f64 <= p * distances.len() as f64);
    }
}

//! End-to-end glue: train the selected detectors on a legitimate series,
//! score new series, and shuttle score rows through CSV.
//!
//! Scaling conventions: standardized features for PCA and the one-class
//! SVM, min-max features for the LSTM (fitted inside its trainer). The
//! LSTM threshold is calibrated on the chronological validation tail the
//! trainer held out, falling back to the whole training series when the
//! tail is empty.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::eval::ScoredWindow;
use crate::ingest::{scale_series, IngestError, Scaler, ScalerKind};
use crate::lstm::{
    threshold_from_distances, train_lstm, LstmError, LstmHyperparams, LstmPredictor, TrainingReport,
};
use crate::ocsvm::{fit_ocsvm, Gamma, OcsvmError, OcsvmModel, OcsvmParams};
use crate::pca::{fit_pca, PcaDensityModel, PcaError};
use crate::trace::WindowedSeries;

pub const DETECTOR_PCA: &str = "pca";
pub const DETECTOR_OCSVM: &str = "ocsvm";
pub const DETECTOR_LSTM: &str = "lstm";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Pca(#[from] PcaError),
    #[error(transparent)]
    Ocsvm(#[from] OcsvmError),
    #[error(transparent)]
    Lstm(#[from] LstmError),
    #[error("scores file line {line}: {reason}")]
    BadScoresLine { line: usize, reason: String },
}

/// Which detectors to train and the knobs for each.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub pca: bool,
    pub ocsvm: bool,
    pub lstm: bool,
    pub pca_k: usize,
    pub nu: f64,
    pub gamma: Gamma,
    pub lstm_hp: LstmHyperparams,
    /// Target false-positive rate for the LSTM threshold.
    pub fpr_target: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            pca: true,
            ocsvm: true,
            lstm: true,
            pca_k: 20,
            nu: 0.05,
            gamma: Gamma::Scale,
            lstm_hp: LstmHyperparams::default(),
            fpr_target: 0.01,
        }
    }
}

/// Fitted detectors plus fitting diagnostics.
pub struct TrainedDetectors {
    pub pca: Option<PcaDensityModel>,
    pub ocsvm: Option<OcsvmModel>,
    pub lstm: Option<LstmPredictor>,
    pub lstm_report: Option<TrainingReport>,
    /// Effective PCA rank after clamping to the feature dimension.
    pub pca_k_used: Option<usize>,
    pub warnings: Vec<String>,
}

/// Trains every selected detector on a legitimate windowed series.
pub fn train_detectors(
    series: &WindowedSeries,
    options: &TrainOptions,
) -> Result<TrainedDetectors, PipelineError> {
    let mut out = TrainedDetectors {
        pca: None,
        ocsvm: None,
        lstm: None,
        lstm_report: None,
        pca_k_used: None,
        warnings: Vec::new(),
    };

    let standardized: Option<(Scaler, Vec<Vec<f64>>)> = if options.pca || options.ocsvm {
        let scaler = Scaler::fit(series, ScalerKind::Standardize)?;
        let rows: Vec<Vec<f64>> = scale_series(&scaler, series)
            .into_iter()
            .flat_map(|s| s.rows)
            .collect();
        Some((scaler, rows))
    } else {
        None
    };

    if options.pca {
        let (scaler, rows) = standardized.as_ref().expect("standardized rows");
        let d = series.dim();
        let k = if options.pca_k < d {
            options.pca_k
        } else {
            let clamped = (d - 1).max(1);
            out.warnings.push(format!(
                "pca: rank {} clamped to {clamped} for feature dimension {d}",
                options.pca_k
            ));
            clamped
        };
        out.pca = Some(fit_pca(rows, k, scaler.clone())?);
        out.pca_k_used = Some(k);
    }

    if options.ocsvm {
        let (scaler, rows) = standardized.as_ref().expect("standardized rows");
        let params = OcsvmParams {
            nu: options.nu,
            gamma: options.gamma,
            ..OcsvmParams::default()
        };
        out.ocsvm = Some(fit_ocsvm(rows, &params, scaler.clone())?);
    }

    if options.lstm {
        let (mut model, report) = train_lstm(series, &options.lstm_hp)?;
        if report.validation_distances.is_empty() {
            out.warnings
                .push("lstm: empty validation tail, calibrating on the training series".into());
            model.calibrate_threshold(series, options.fpr_target)?;
        } else {
            let threshold =
                threshold_from_distances(&report.validation_distances, options.fpr_target)?;
            model.set_threshold(threshold);
        }
        out.lstm = Some(model);
        out.lstm_report = Some(report);
    }

    Ok(out)
}

/// One scores.csv row. `flag` is only meaningful for the LSTM (the other
/// detectors have no calibrated threshold) and is written as an empty field
/// for them.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreRow {
    pub session_id: u32,
    pub window_index: usize,
    pub label: bool,
    pub detector: String,
    pub score: f64,
    pub flag: Option<bool>,
}

/// Scores every window of the series with each fitted detector. PCA and the
/// one-class SVM score all windows; the LSTM skips the first `delta` of
/// each session and the count of skipped windows lands in `warnings`.
pub fn score_detectors(
    models: &TrainedDetectors,
    series: &WindowedSeries,
) -> Result<(Vec<ScoreRow>, Vec<String>), PipelineError> {
    let mut rows = Vec::new();
    let mut warnings = Vec::new();

    if let Some(pca) = &models.pca {
        for (vector, label) in series.iter_windows() {
            rows.push(ScoreRow {
                session_id: vector.session_id,
                window_index: vector.window_index,
                label,
                detector: DETECTOR_PCA.to_string(),
                score: pca.score_counts(&vector.counts)?,
                flag: None,
            });
        }
    }
    if let Some(ocsvm) = &models.ocsvm {
        for (vector, label) in series.iter_windows() {
            rows.push(ScoreRow {
                session_id: vector.session_id,
                window_index: vector.window_index,
                label,
                detector: DETECTOR_OCSVM.to_string(),
                score: ocsvm.score_counts(&vector.counts)?,
                flag: None,
            });
        }
    }
    if let Some(lstm) = &models.lstm {
        let scores = lstm.score_series(series)?;
        if scores.unscored > 0 {
            warnings.push(format!(
                "lstm: {} windows unscored (first {} of each session)",
                scores.unscored,
                lstm.hyperparams().delta
            ));
        }
        for w in scores.scored {
            rows.push(ScoreRow {
                session_id: w.session_id,
                window_index: w.window_index,
                label: w.label,
                detector: DETECTOR_LSTM.to_string(),
                score: w.score,
                flag: Some(w.flag),
            });
        }
    }

    rows.sort_by(|a, b| {
        (a.session_id, a.window_index, &a.detector).cmp(&(
            b.session_id,
            b.window_index,
            &b.detector,
        ))
    });
    Ok((rows, warnings))
}

const SCORES_HEADER: &str = "session_id,window_index,label,detector,score,flag";

/// Writes score rows in the scores.csv format, header included.
pub fn write_scores_csv<W: Write>(rows: &[ScoreRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{SCORES_HEADER}")?;
    for row in rows {
        let flag = match row.flag {
            Some(true) => "1",
            Some(false) => "0",
            None => "",
        };
        writeln!(
            w,
            "{},{},{},{},{},{flag}",
            row.session_id,
            row.window_index,
            u8::from(row.label),
            row.detector,
            row.score
        )?;
    }
    Ok(())
}

/// Parses a scores.csv stream back into rows.
pub fn parse_scores_csv<R: BufRead>(r: R) -> Result<Vec<ScoreRow>, PipelineError> {
    let mut rows = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(IngestError::Io)?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() || (idx == 0 && line == SCORES_HEADER) {
            continue;
        }
        let bad = |reason: &str| PipelineError::BadScoresLine {
            line: line_no,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad("expected 6 comma-separated fields"));
        }
        rows.push(ScoreRow {
            session_id: fields[0].parse().map_err(|_| bad("bad session_id"))?,
            window_index: fields[1].parse().map_err(|_| bad("bad window_index"))?,
            label: match fields[2] {
                "0" => false,
                "1" => true,
                _ => return Err(bad("label must be 0 or 1")),
            },
            detector: fields[3].to_string(),
            score: fields[4].parse().map_err(|_| bad("bad score"))?,
            flag: match fields[5] {
                "" => None,
                "0" => Some(false),
                "1" => Some(true),
                _ => return Err(bad("flag must be empty, 0, or 1")),
            },
        });
    }
    Ok(rows)
}

impl ScoreRow {
    pub fn as_scored_window(&self) -> ScoredWindow {
        ScoredWindow {
            session_id: self.session_id,
            window_index: self.window_index,
            label: self.label,
            score: self.score,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::windowize;
    use crate::trace::build_vocabulary;
    use crate::workload::{generate_legit, WorkloadProfile};
    use std::sync::Arc;

    fn small_series() -> WindowedSeries {
        let mut profile = WorkloadProfile::builtin("cyclic").unwrap();
        profile.seed = 99;
        let events = generate_legit(&profile, 70_000_000_000, 0).unwrap();
        let vocab = Arc::new(build_vocabulary(&events));
        windowize(&events, &vocab, 1_000_000_000, &[])
    }

    fn fast_options() -> TrainOptions {
        TrainOptions {
            lstm_hp: LstmHyperparams {
                hidden_units: 6,
                delta: 5,
                epochs: 3,
                batch_size: 16,
                seed: 1,
                ..LstmHyperparams::default()
            },
            ..TrainOptions::default()
        }
    }

    #[test]
    fn trains_and_scores_all_three_detectors() {
        let series = small_series();
        let options = fast_options();
        let models = train_detectors(&series, &options).unwrap();
        assert!(models.pca.is_some());
        assert!(models.ocsvm.is_some());
        assert!(models.lstm.is_some());
        assert!(models.lstm.as_ref().unwrap().threshold().is_some());
        // cyclic alphabet is 9-dimensional with OOV: k was clamped
        assert_eq!(models.pca_k_used, Some(series.dim() - 1));
        assert_eq!(models.warnings.len(), 1);

        let (rows, warnings) = score_detectors(&models, &series).unwrap();
        let n = series.num_windows();
        let lstm_rows = rows.iter().filter(|r| r.detector == DETECTOR_LSTM).count();
        assert_eq!(
            rows.len(),
            2 * n + lstm_rows,
            "pca and ocsvm score every window"
        );
        assert!(warnings.iter().any(|w| w.contains("unscored")));
        assert!(rows.iter().all(|r| r.score.is_finite()));
    }

    #[test]
    fn selecting_one_detector_trains_only_it() {
        let series = small_series();
        let options = TrainOptions {
            pca: false,
            ocsvm: false,
            ..fast_options()
        };
        let models = train_detectors(&series, &options).unwrap();
        assert!(models.pca.is_none());
        assert!(models.ocsvm.is_none());
        assert!(models.lstm.is_some());
    }

    #[test]
    fn scores_csv_round_trips() {
        let rows = vec![
            ScoreRow {
                session_id: 0,
                window_index: 3,
                label: false,
                detector: "pca".into(),
                score: 12.345678901234567,
                flag: None,
            },
            ScoreRow {
                session_id: 1,
                window_index: 17,
                label: true,
                detector: "lstm".into(),
                score: 0.25,
                flag: Some(true),
            },
        ];
        let mut buf = Vec::new();
        write_scores_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(SCORES_HEADER));
        let back = parse_scores_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, back);
    }

    #[test]
    fn malformed_scores_lines_are_rejected() {
        let err = parse_scores_csv("nope\n".as_bytes()).unwrap_err();
        assert!(matches!(err, PipelineError::BadScoresLine { line: 1, .. }));
    }
}

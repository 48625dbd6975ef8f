//! ROC/AUC computation and per-scenario evaluation reports.
//!
//! Thresholds sweep the distinct score values descending with ties grouped,
//! so the trapezoidal area under the curve equals the Mann-Whitney pair
//! statistic with ties counted one half.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

use crate::trace::LabelSpan;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("degenerate labels: need at least one positive and one negative")]
    DegenerateLabels,
    #[error("scores and labels differ in length: {scores} vs {labels}")]
    LengthMismatch { scores: usize, labels: usize },
}

/// One point on a ROC curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

fn check_inputs(scores: &[f64], labels: &[bool]) -> Result<(usize, usize), EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::DegenerateLabels);
    }
    Ok((pos, neg))
}

/// Computes the ROC curve for anomaly scores (higher = more anomalous)
/// against boolean labels (true = attack).
///
/// Points run from (0,0) to (1,1), one per distinct score value, and are
/// monotone non-decreasing in both coordinates.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<RocPoint>, EvalError> {
    let (pos, neg) = check_inputs(scores, labels)?;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut points = Vec::with_capacity(scores.len() + 1);
    points.push(RocPoint { fpr: 0.0, tpr: 0.0 });
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        // group ties: one point per distinct score
        let score = scores[order[i]];
        while i < order.len() && scores[order[i]] == score {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(points)
}

/// Area under the tie-grouped ROC curve (trapezoidal). Equals the
/// probability that a uniformly random attack window outscores a uniformly
/// random legitimate one, ties counting one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64, EvalError> {
    let points = roc_curve(scores, labels)?;
    let mut area = 0.0;
    for pair in points.windows(2) {
        area += (pair[1].fpr - pair[0].fpr) * (pair[0].tpr + pair[1].tpr) / 2.0;
    }
    Ok(area)
}

/// TPR of the rightmost ROC point whose FPR does not exceed `fpr`
/// (step-function convention).
pub fn tpr_at_fpr(scores: &[f64], labels: &[bool], fpr: f64) -> Result<f64, EvalError> {
    let points = roc_curve(scores, labels)?;
    Ok(points
        .iter()
        .rev()
        .find(|p| p.fpr <= fpr)
        .map_or(0.0, |p| p.tpr))
}

/// One window's score from one detector, as read back from a scores file.
#[derive(Debug, Clone)]
pub struct ScoredWindow {
    pub session_id: u32,
    pub window_index: usize,
    pub label: bool,
    pub score: f64,
}

/// ROC curve and summary statistics of one detector on one scenario.
#[derive(Debug, Clone)]
pub struct DetectorEval {
    pub roc: Vec<RocPoint>,
    pub auc: f64,
    /// `(requested fpr, achieved tpr)` pairs, in request order.
    pub tpr_at: Vec<(f64, f64)>,
    pub n_attack: usize,
    pub n_legit: usize,
}

/// Evaluation of all detectors on one attack scenario.
#[derive(Debug, Clone)]
pub struct ScenarioEval {
    pub scenario: String,
    pub detectors: BTreeMap<String, DetectorEval>,
}

/// Full evaluation report: one entry per attack scenario plus the
/// `averaged` scenario pooling every attack window.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub scenarios: Vec<ScenarioEval>,
    pub fpr_targets: Vec<f64>,
}

/// Scenario name used for the union of all attack windows.
pub const AVERAGED_SCENARIO: &str = "averaged";

/// Builds the per-scenario evaluation report.
///
/// Attack windows are assigned to scenarios by overlap with the label spans'
/// `kind`; legitimate windows are shared by every scenario. Each detector is
/// evaluated on its own scored set unless `strict_intersection` is set, in
/// which case all detectors are restricted to the windows every detector
/// scored (the LSTM leaves the first Δ windows of each session unscored).
///
/// A detector whose filtered set is single-class for some scenario (e.g. the
/// only attack windows fell in its unscored prefix) is omitted from that
/// scenario. The report as a whole is `DegenerateLabels` only when nothing
/// at all could be evaluated.
pub fn build_report(
    per_detector: &BTreeMap<String, Vec<ScoredWindow>>,
    spans: &[LabelSpan],
    interval_ns: u64,
    fpr_targets: &[f64],
    strict_intersection: bool,
) -> Result<EvalReport, EvalError> {
    assert!(interval_ns > 0, "interval_ns must be positive");

    let common: Option<BTreeSet<(u32, usize)>> = strict_intersection.then(|| {
        let mut sets = per_detector.values().map(|rows| {
            rows.iter()
                .map(|r| (r.session_id, r.window_index))
                .collect::<BTreeSet<_>>()
        });
        let first = sets.next().unwrap_or_default();
        sets.fold(first, |acc, s| acc.intersection(&s).copied().collect())
    });

    let kinds_of = |session_id: u32, window_index: usize| -> Vec<&str> {
        let start = window_index as u64 * interval_ns;
        let end = start + interval_ns;
        spans
            .iter()
            .filter(|s| s.session_id == session_id && s.overlaps(start, end))
            .map(|s| s.kind.as_str())
            .collect()
    };

    let mut scenario_names: BTreeSet<String> = spans.iter().map(|s| s.kind.clone()).collect();
    scenario_names.insert(AVERAGED_SCENARIO.to_string());

    let mut scenarios = Vec::new();
    for scenario in scenario_names {
        let mut detectors = BTreeMap::new();
        for (name, rows) in per_detector {
            let mut scores = Vec::new();
            let mut labels = Vec::new();
            for row in rows {
                if let Some(common) = &common {
                    if !common.contains(&(row.session_id, row.window_index)) {
                        continue;
                    }
                }
                // legitimate windows are shared across scenarios; attack
                // windows belong to the scenarios they overlap
                let include = !row.label
                    || scenario == AVERAGED_SCENARIO
                    || kinds_of(row.session_id, row.window_index).contains(&scenario.as_str());
                if include {
                    scores.push(row.score);
                    labels.push(row.label);
                }
            }
            let n_attack = labels.iter().filter(|&&l| l).count();
            let n_legit = labels.len() - n_attack;
            if n_attack == 0 || n_legit == 0 {
                continue;
            }
            let roc = roc_curve(&scores, &labels)?;
            let auc = auc(&scores, &labels)?;
            let tpr_at = fpr_targets
                .iter()
                .map(|&f| Ok((f, tpr_at_fpr(&scores, &labels, f)?)))
                .collect::<Result<Vec<_>, EvalError>>()?;
            detectors.insert(
                name.clone(),
                DetectorEval {
                    roc,
                    auc,
                    tpr_at,
                    n_attack,
                    n_legit,
                },
            );
        }
        if !detectors.is_empty() {
            scenarios.push(ScenarioEval {
                scenario,
                detectors,
            });
        }
    }

    if scenarios.is_empty() {
        return Err(EvalError::DegenerateLabels);
    }
    Ok(EvalReport {
        scenarios,
        fpr_targets: fpr_targets.to_vec(),
    })
}

impl EvalReport {
    /// `summary.csv` body: one row per scenario and detector with AUC,
    /// TPR at each requested FPR, and window counts.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("scenario,detector,auc");
        for f in &self.fpr_targets {
            let _ = write!(out, ",tpr@{f}");
        }
        out.push_str(",n_attack,n_legit\n");
        for scenario in &self.scenarios {
            for (name, eval) in &scenario.detectors {
                let _ = write!(out, "{},{},{:.6}", scenario.scenario, name, eval.auc);
                for (_, tpr) in &eval.tpr_at {
                    let _ = write!(out, ",{tpr:.6}");
                }
                let _ = writeln!(out, ",{},{}", eval.n_attack, eval.n_legit);
            }
        }
        out
    }

    /// Per-scenario ROC CSV: `detector,fpr,tpr` rows.
    pub fn scenario_csv(&self, scenario: &ScenarioEval) -> String {
        let mut out = String::from("detector,fpr,tpr\n");
        for (name, eval) in &scenario.detectors {
            for p in &eval.roc {
                let _ = writeln!(out, "{},{:.6},{:.6}", name, p.fpr, p.tpr);
            }
        }
        out
    }

    /// Self-contained SVG ROC plot for one scenario: unit axes, one polyline
    /// per detector, legend with AUC to two decimals.
    pub fn scenario_svg(&self, scenario: &ScenarioEval) -> String {
        const W: f64 = 560.0;
        const H: f64 = 560.0;
        const M: f64 = 60.0; // margin around the unit plot area
        let px = |fpr: f64| M + fpr * (W - 2.0 * M);
        let py = |tpr: f64| H - M - tpr * (H - 2.0 * M);
        const COLORS: [&str; 6] = [
            "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
        ];

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
             viewBox=\"0 0 {W} {H}\">"
        );
        let _ = writeln!(svg, "  <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
        // axes
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            px(0.0),
            py(0.0),
            px(1.0),
            py(0.0)
        );
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>",
            px(0.0),
            py(0.0),
            px(0.0),
            py(1.0)
        );
        for i in 0..=5 {
            let v = i as f64 / 5.0;
            let _ = writeln!(
                svg,
                "  <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">{v:.1}</text>",
                px(v),
                py(0.0) + 20.0
            );
            let _ = writeln!(
                svg,
                "  <text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{v:.1}</text>",
                px(0.0) - 8.0,
                py(v) + 4.0
            );
        }
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">false positive rate</text>",
            px(0.5),
            H - 12.0
        );
        let _ = writeln!(
            svg,
            "  <text x=\"16\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" \
             transform=\"rotate(-90 16 {})\">true positive rate</text>",
            py(0.5),
            py(0.5)
        );
        let _ = writeln!(
            svg,
            "  <text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
            W / 2.0,
            scenario.scenario
        );
        // chance diagonal
        let _ = writeln!(
            svg,
            "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#bbbbbb\" \
             stroke-dasharray=\"4 4\"/>",
            px(0.0),
            py(0.0),
            px(1.0),
            py(1.0)
        );
        for (i, (name, eval)) in scenario.detectors.iter().enumerate() {
            let color = COLORS[i % COLORS.len()];
            let mut path = String::new();
            for p in &eval.roc {
                let _ = write!(path, "{:.2},{:.2} ", px(p.fpr), py(p.tpr));
            }
            let _ = writeln!(
                svg,
                "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
                path.trim_end()
            );
            let ly = 60.0 + 20.0 * i as f64;
            let _ = writeln!(
                svg,
                "  <line x1=\"{}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" stroke-width=\"2\"/>",
                W - 220.0,
                W - 190.0
            );
            let _ = writeln!(
                svg,
                "  <text x=\"{}\" y=\"{}\" font-size=\"13\">{} (AUC {:.2})</text>",
                W - 182.0,
                ly + 4.0,
                name,
                eval.auc
            );
        }
        svg.push_str("</svg>\n");
        svg
    }
}

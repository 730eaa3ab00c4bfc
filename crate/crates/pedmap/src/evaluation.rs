//! Scoring advisories against ground truth.
//!
//! Ground truth is a list of time windows per clip during which an advisory
//! should be active. An episode is correct when it overlaps any window
//! (closed intervals); a window is covered when any episode overlaps it.
//! Precision = correct / (correct + false), recall = covered / (covered +
//! missed), both 1.0 on an empty denominator: no episodes means nothing
//! claimed falsely, no windows means nothing to miss.

use crate::advisory::AdvisoryOutput;
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("advisory clip {advisories} does not match ground truth clip {ground_truth}")]
    ClipMismatch {
        advisories: String,
        ground_truth: String,
    },
    #[error("cannot aggregate runs with different sampling distances: {0} vs {1}")]
    MixedSamplingDistance(f64, f64),
    #[error("nothing to aggregate")]
    Empty,
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One interval during which an advisory should be active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthWindow {
    pub t_start: f64,
    pub t_end: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub clip_id: String,
    pub windows: Vec<GroundTruthWindow>,
}

fn overlaps(a_start: f64, a_end: f64, b_start: f64, b_end: f64) -> bool {
    a_start <= b_end && b_start <= a_end
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MatchCounts {
    /// Episodes overlapping at least one window.
    pub correct: u64,
    /// Episodes overlapping no window.
    pub false_advisories: u64,
    /// Windows overlapped by no episode.
    pub missed: u64,
    /// Windows overlapped by at least one episode.
    pub covered_windows: u64,
}

pub fn match_counts(episodes: &[(f64, f64)], windows: &[GroundTruthWindow]) -> MatchCounts {
    let mut counts = MatchCounts::default();
    for &(e_start, e_end) in episodes {
        if windows
            .iter()
            .any(|w| overlaps(e_start, e_end, w.t_start, w.t_end))
        {
            counts.correct += 1;
        } else {
            counts.false_advisories += 1;
        }
    }
    for w in windows {
        if episodes
            .iter()
            .any(|&(e_start, e_end)| overlaps(e_start, e_end, w.t_start, w.t_end))
        {
            counts.covered_windows += 1;
        } else {
            counts.missed += 1;
        }
    }
    counts
}

pub fn precision(correct: u64, false_advisories: u64) -> f64 {
    if correct + false_advisories == 0 {
        1.0
    } else {
        correct as f64 / (correct + false_advisories) as f64
    }
}

pub fn recall(covered: u64, missed: u64) -> f64 {
    if covered + missed == 0 {
        1.0
    } else {
        covered as f64 / (covered + missed) as f64
    }
}

/// Per-clip scores in report form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub clip_id: String,
    pub sampling_distance_m: f64,
    pub correct: u64,
    pub false_advisories: u64,
    pub missed: u64,
    pub precision: f64,
    pub recall: f64,
}

pub fn evaluate_run(out: &AdvisoryOutput, gt: &GroundTruth) -> Result<EvalReport, EvaluationError> {
    if out.clip_id != gt.clip_id {
        return Err(EvaluationError::ClipMismatch {
            advisories: out.clip_id.clone(),
            ground_truth: gt.clip_id.clone(),
        });
    }
    let episodes: Vec<(f64, f64)> = out.episodes.iter().map(|e| (e.t_start, e.t_end)).collect();
    let counts = match_counts(&episodes, &gt.windows);
    Ok(report_from_counts(
        out.clip_id.clone(),
        out.params.sampling_distance_m,
        counts,
    ))
}

fn report_from_counts(clip_id: String, sampling_distance_m: f64, c: MatchCounts) -> EvalReport {
    EvalReport {
        clip_id,
        sampling_distance_m,
        correct: c.correct,
        false_advisories: c.false_advisories,
        missed: c.missed,
        precision: precision(c.correct, c.false_advisories),
        recall: recall(c.covered_windows, c.missed),
    }
}

/// Micro-average across clips: pool the counts, then compute the ratios
/// once. Requires a uniform sampling distance so the pooled figure describes
/// one configuration.
pub fn evaluate_aggregate(
    pairs: &[(&AdvisoryOutput, &GroundTruth)],
) -> Result<EvalReport, EvaluationError> {
    let (first, _) = pairs.first().ok_or(EvaluationError::Empty)?;
    let k = first.params.sampling_distance_m;
    let mut pooled = MatchCounts::default();
    for (out, gt) in pairs {
        if out.params.sampling_distance_m != k {
            return Err(EvaluationError::MixedSamplingDistance(
                k,
                out.params.sampling_distance_m,
            ));
        }
        if out.clip_id != gt.clip_id {
            return Err(EvaluationError::ClipMismatch {
                advisories: out.clip_id.clone(),
                ground_truth: gt.clip_id.clone(),
            });
        }
        let episodes: Vec<(f64, f64)> = out.episodes.iter().map(|e| (e.t_start, e.t_end)).collect();
        let c = match_counts(&episodes, &gt.windows);
        pooled.correct += c.correct;
        pooled.false_advisories += c.false_advisories;
        pooled.missed += c.missed;
        pooled.covered_windows += c.covered_windows;
    }
    Ok(report_from_counts("aggregate".to_string(), k, pooled))
}

pub fn ground_truth_to_json(gt: &GroundTruth) -> String {
    let mut json = serde_json::to_string_pretty(gt).expect("ground truth serializes");
    json.push('\n');
    json
}

pub fn ground_truth_from_json(content: &str) -> Result<GroundTruth, EvaluationError> {
    let gt: GroundTruth =
        serde_json::from_str(content).map_err(|e| EvaluationError::Format(e.to_string()))?;
    for w in &gt.windows {
        if !(w.t_start.is_finite() && w.t_end.is_finite()) || w.t_end < w.t_start {
            return Err(EvaluationError::Format(format!(
                "bad window [{}, {}]",
                w.t_start, w.t_end
            )));
        }
    }
    Ok(gt)
}

pub fn save_ground_truth_file(gt: &GroundTruth, path: &Path) -> Result<(), EvaluationError> {
    std::fs::write(path, ground_truth_to_json(gt))?;
    Ok(())
}

pub fn load_ground_truth_file(path: &Path) -> Result<GroundTruth, EvaluationError> {
    ground_truth_from_json(&std::fs::read_to_string(path)?)
}

pub fn report_to_json(report: &EvalReport) -> String {
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    json
}

/// Summary CSV row for one scored clip: duration from the sample span,
/// scenario from the distinct ground-truth labels.
pub fn report_csv(
    rows: &[(&AdvisoryOutput, &GroundTruth, &EvalReport)],
) -> Result<String, EvaluationError> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record([
        "clip",
        "duration_min",
        "scenario",
        "sampling_distance_m",
        "precision",
        "recall",
    ])
    .map_err(|e| EvaluationError::Format(e.to_string()))?;
    for (out, gt, report) in rows {
        let duration_min = match (out.samples.first(), out.samples.last()) {
            (Some(a), Some(b)) => (b.t - a.t) / 60.0,
            _ => 0.0,
        };
        let mut labels: Vec<&str> = gt.windows.iter().map(|w| w.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        let scenario = if labels.is_empty() {
            "none".to_string()
        } else {
            labels.join("+")
        };
        wtr.write_record([
            report.clip_id.as_str(),
            &duration_min.to_string(),
            &scenario,
            &report.sampling_distance_m.to_string(),
            &report.precision.to_string(),
            &report.recall.to_string(),
        ])
        .map_err(|e| EvaluationError::Format(e.to_string()))?;
    }
    String::from_utf8(
        wtr.into_inner()
            .map_err(|e| EvaluationError::Format(e.to_string()))?,
    )
    .map_err(|e| EvaluationError::Format(e.to_string()))
}

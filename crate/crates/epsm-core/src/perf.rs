//! Conventional detection performance metrics: IoU, precision/recall,
//! F1, accuracy, interpolated average precision, MODA/MODP and the
//! point-based lane confusion counts.

use crate::error::{Error, Result};
use crate::geometry::{box_intersection_area, point_polyline_distance, OrientedBox, Vec2};
use crate::scenario::ObjectClass;
use std::collections::BTreeMap;

/// TP/FP/FN/TN tallies. `tn` only feeds accuracy; for point-based lane
/// evaluation the resampled grid holds no off-lane samples, so lane
/// confusion carries `tn = 0` and accuracy reduces to TP/(TP+FP+FN).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

/// Precision/recall/F1/accuracy. `degenerate` is set when any of the
/// denominators was empty (every affected score reported as 0).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerfScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub degenerate: bool,
}

/// One point of a precision/recall curve at a confidence threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PRPoint {
    pub recall: f64,
    pub precision: f64,
    pub threshold: f64,
}

/// Intersection over union of two oriented box footprints.
pub fn iou(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let inter = box_intersection_area(a, b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

pub fn precision_recall_f1_accuracy(counts: &ConfusionCounts) -> PerfScores {
    let mut degenerate = false;
    let mut ratio = |num: u64, den: u64| -> f64 {
        if den == 0 {
            degenerate = true;
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let precision = ratio(counts.tp, counts.tp + counts.fp);
    let recall = ratio(counts.tp, counts.tp + counts.fn_);
    let accuracy = ratio(counts.tp + counts.tn, counts.tp + counts.tn + counts.fp + counts.fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        degenerate = true;
        0.0
    };
    PerfScores { precision, recall, f1, accuracy, degenerate }
}

fn interpolated_precision(curve: &[PRPoint], recall: f64) -> f64 {
    curve
        .iter()
        .filter(|p| p.recall >= recall)
        .map(|p| p.precision)
        .fold(0.0, f64::max)
}

/// 11-point interpolated AP: mean of max-precision-to-the-right at
/// recalls 0.0, 0.1, ..., 1.0. An empty curve (no true positive at any
/// threshold) scores 0.
pub fn ap_11point(curve: &[PRPoint]) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    let sum: f64 = (0..=10)
        .map(|i| interpolated_precision(curve, i as f64 / 10.0))
        .sum();
    sum / 11.0
}

/// All-point interpolated AP: sum over recall steps of
/// `(r_{i+1} - r_i) * max_{r' >= r_{i+1}} p(r')`, with an implicit
/// origin at recall 0. The curve must be sorted by non-decreasing
/// recall.
pub fn ap_allpoint(curve: &[PRPoint]) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut prev_recall = 0.0;
    for point in curve {
        let width = point.recall - prev_recall;
        if width > 0.0 {
            acc += width * interpolated_precision(curve, point.recall);
            prev_recall = point.recall;
        }
    }
    acc
}

/// Arithmetic mean of per-class APs.
pub fn mean_ap(per_class: &BTreeMap<ObjectClass, f64>) -> Result<f64> {
    if per_class.is_empty() {
        return Err(Error::EmptyInput("mean_ap needs at least one class"));
    }
    Ok(per_class.values().sum::<f64>() / per_class.len() as f64)
}

/// Multiple-object detection accuracy over a frame series:
/// `1 - sum(misses + false positives) / sum(ground truths)`. Can go
/// negative; reported raw.
pub fn moda(misses: &[u64], false_positives: &[u64], ground_truths: &[u64]) -> Result<f64> {
    if misses.len() != false_positives.len() || misses.len() != ground_truths.len() {
        return Err(Error::DegenerateInput(format!(
            "series lengths differ: {} / {} / {}",
            misses.len(),
            false_positives.len(),
            ground_truths.len()
        )));
    }
    let gt: u64 = ground_truths.iter().sum();
    if gt == 0 {
        return Err(Error::DegenerateInput("no ground-truth objects in the series".into()));
    }
    let errors: u64 = misses.iter().sum::<u64>() + false_positives.iter().sum::<u64>();
    Ok(1.0 - errors as f64 / gt as f64)
}

/// Multiple-object detection precision: mean IoU over mapped pairs.
/// Returns `(0.0, true)` when there are no mapped pairs.
pub fn modp(matched_ious: &[f64]) -> (f64, bool) {
    if matched_ious.is_empty() {
        return (0.0, true);
    }
    (matched_ious.iter().sum::<f64>() / matched_ious.len() as f64, false)
}

/// Point-based lane confusion: a detected point within `threshold` of
/// the ground-truth polyline is a TP (else FP); a ground-truth point
/// with no detected point within `threshold` is an FN. Both inputs are
/// expected at a common resampled spacing.
pub fn lane_point_confusion(gt: &[Vec2], det: &[Vec2], threshold: f64) -> ConfusionCounts {
    let mut counts = ConfusionCounts::default();
    for p in det {
        if point_polyline_distance(*p, gt) <= threshold {
            counts.tp += 1;
        } else {
            counts.fp += 1;
        }
    }
    for p in gt {
        let covered = !det.is_empty() && point_polyline_distance(*p, det) <= threshold;
        if !covered {
            counts.fn_ += 1;
        }
    }
    counts
}

//! Detection/ground-truth matching and the weighted object safety score.
//!
//! Each ground-truth object gets a weight `w = criticality * severity`
//! when it was missed (zero when detected). The score compares the
//! weight mass against the criticality mass with the two worst entries
//! amplified, so a single safety-critical miss outweighs many benign
//! detections.

use crate::criticality::object_criticality;
use crate::geometry::point_polyline_distance;
use crate::perf::iou;
use crate::scenario::{DetectedBox, Frame, LaneRecord, MetricParams, ObjectState};
use crate::severity::{severity, VehicleSeverityModel};
use std::collections::HashSet;

/// One accepted ground-truth/detection pair.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub gt_id: String,
    pub det_index: usize,
    pub iou: f64,
}

/// Outcome of matching one frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchResult {
    pub pairs: Vec<MatchedPair>,
    /// Ground-truth ids with no accepted detection (misses).
    pub fn_ids: Vec<String>,
    /// Detection indices with no accepted ground truth (ghosts).
    pub fp_indices: Vec<usize>,
}

impl MatchResult {
    pub fn is_missed(&self, id: &str) -> bool {
        self.fn_ids.iter().any(|fid| fid == id)
    }
}

/// Greedy same-class matching in descending IoU order. A pair is
/// accepted iff its IoU reaches the class threshold (vehicle/VRU).
/// Ties break on higher IoU, then lower ground-truth id, then lower
/// detection index, which keeps the result order-independent.
pub fn match_detections(
    gt: &[ObjectState],
    det: &[DetectedBox],
    params: &MetricParams,
) -> MatchResult {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (gi, g) in gt.iter().enumerate() {
        let threshold = if g.class.is_vru() {
            params.iou_threshold_vru
        } else {
            params.iou_threshold_vehicle
        };
        for (di, d) in det.iter().enumerate() {
            if d.class != g.class {
                continue;
            }
            let overlap = iou(&g.footprint(), &d.footprint());
            if overlap >= threshold {
                candidates.push((overlap, gi, di));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| gt[a.1].id.cmp(&gt[b.1].id))
            .then_with(|| a.2.cmp(&b.2))
    });

    let mut used_gt: HashSet<usize> = HashSet::new();
    let mut used_det: HashSet<usize> = HashSet::new();
    let mut pairs = Vec::new();
    for (overlap, gi, di) in candidates {
        if used_gt.contains(&gi) || used_det.contains(&di) {
            continue;
        }
        used_gt.insert(gi);
        used_det.insert(di);
        pairs.push(MatchedPair { gt_id: gt[gi].id.clone(), det_index: di, iou: overlap });
    }

    let fn_ids = gt
        .iter()
        .enumerate()
        .filter(|(gi, _)| !used_gt.contains(gi))
        .map(|(_, g)| g.id.clone())
        .collect();
    let fp_indices = (0..det.len()).filter(|di| !used_det.contains(di)).collect();
    MatchResult { pairs, fn_ids, fp_indices }
}

/// Criticality, severity and resulting weight of one ground-truth
/// object. Detected objects carry weight 0.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedObject {
    pub id: String,
    pub criticality: f64,
    pub severity: f64,
    pub weight: f64,
    pub missed: bool,
}

impl WeightedObject {
    pub fn new(id: impl Into<String>, criticality: f64, severity: f64, missed: bool) -> Self {
        WeightedObject {
            id: id.into(),
            criticality,
            severity,
            weight: if missed { criticality * severity } else { 0.0 },
            missed,
        }
    }
}

/// Canonical weighting order: descending weight, so the worst missed
/// object takes the largest amplifier; criticality then id break ties
/// deterministically.
fn canonical_sort(objects: &mut [WeightedObject]) {
    objects.sort_by(|a, b| {
        b.weight
            .partial_cmp(&a.weight)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| b.criticality.partial_cmp(&a.criticality).unwrap_or(std::cmp::Ordering::Equal))
            .then_with(|| a.id.cmp(&b.id))
    });
}

const AMPLIFIERS: [f64; 2] = [16.0, 4.0];

/// The weighted score over canonicalized entries:
/// `1 - (16 w0 + 4 w1 + sum w_i) / (16 c0 + 4 c1 + sum c_i)`.
/// Missing head terms drop from both sums symmetrically; an empty or
/// all-zero-criticality frame scores a perfect 1.0.
pub fn weighted_score(objects: &[WeightedObject]) -> f64 {
    let mut sorted = objects.to_vec();
    canonical_sort(&mut sorted);
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, obj) in sorted.iter().enumerate() {
        let amp = AMPLIFIERS.get(i).copied().unwrap_or(1.0);
        num += amp * obj.weight;
        den += amp * obj.criticality;
    }
    if den == 0.0 {
        return 1.0;
    }
    (1.0 - num / den).clamp(0.0, 1.0)
}

/// Computes criticality/severity/weights for every ground-truth object
/// of a frame and folds them into the object safety score. Returns the
/// score and the weighted entries in canonical order.
pub fn object_safety_score(
    frame: &Frame,
    matches: &MatchResult,
    params: &MetricParams,
    model: &VehicleSeverityModel,
) -> (f64, Vec<WeightedObject>) {
    let mut weighted: Vec<WeightedObject> = frame
        .objects
        .iter()
        .map(|obj| {
            let c = object_criticality(&frame.ego, obj, params);
            let i = severity(&frame.ego, obj, model, params);
            WeightedObject::new(obj.id.clone(), c, i, matches.is_missed(&obj.id))
        })
        .collect();
    canonical_sort(&mut weighted);
    (weighted_score(&weighted), weighted)
}

/// Missed (FN) objects whose center lies within the lateral half-width
/// of the given lane centerline.
pub fn missed_objects_in_lane<'a>(
    frame: &'a Frame,
    matches: &MatchResult,
    lane: &LaneRecord,
) -> Vec<&'a ObjectState> {
    frame
        .objects
        .iter()
        .filter(|obj| matches.is_missed(&obj.id))
        .filter(|obj| {
            point_polyline_distance(obj.position_m, &lane.centerline_m) <= lane.width_m / 2.0
        })
        .collect()
}

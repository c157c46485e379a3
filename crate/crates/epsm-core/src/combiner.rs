//! Fusion of the object and lane safety scores into the final
//! classified safety score: power-mean combination, the five-case
//! interdependence decision tree, bonus/penalty adjustment and the
//! five-level classification.

use crate::scenario::MetricParams;
use serde::Serialize;
use std::fmt;

/// Decision-tree case. The A branch has a laterally safe lane
/// detection; the B branch does not. B1 splits by whether the missed
/// object sits on a sidewalk (B1.1) or a road (B1.2).
#[allow(non_camel_case_types)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TreeCase {
    A1,
    A2,
    B1_1,
    B1_2,
    B2,
}

impl fmt::Display for TreeCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TreeCase::A1 => "A1",
            TreeCase::A2 => "A2",
            TreeCase::B1_1 => "B1_1",
            TreeCase::B1_2 => "B1_2",
            TreeCase::B2 => "B2",
        })
    }
}

/// Adjustment applied on top of the power-mean score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Adjustment {
    None,
    Bonus { factor: f64 },
    Penalty { factor: f64, ttc_min: Option<f64> },
}

/// Five-level interpretation of the final score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SafetyLabel {
    Insufficient,
    VeryBad,
    Bad,
    Good,
    VeryGood,
}

impl fmt::Display for SafetyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SafetyLabel::Insufficient => "insufficient",
            SafetyLabel::VeryBad => "very_bad",
            SafetyLabel::Bad => "bad",
            SafetyLabel::Good => "good",
            SafetyLabel::VeryGood => "very_good",
        })
    }
}

impl SafetyLabel {
    pub fn parse(text: &str) -> Option<SafetyLabel> {
        Some(match text {
            "insufficient" => SafetyLabel::Insufficient,
            "very_bad" => SafetyLabel::VeryBad,
            "bad" => SafetyLabel::Bad,
            "good" => SafetyLabel::Good,
            "very_good" => SafetyLabel::VeryGood,
            _ => return None,
        })
    }
}

/// Full breakdown of one frame's combined score.
#[derive(Debug, Clone, PartialEq)]
pub struct SafetyBreakdown {
    pub s_obj: f64,
    pub s_lane: f64,
    pub s_p: f64,
    pub tree_case: TreeCase,
    pub adjustment: Adjustment,
    pub s_f: f64,
    pub label: SafetyLabel,
}

/// Where a missed in-lane object sits, for the B1 split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissLocation {
    Road,
    Sidewalk,
}

/// One missed object inside the detected lane, with its predicted
/// time to collision when one exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InLaneMiss {
    pub location: MissLocation,
    pub ttc: Option<f64>,
}

/// Decision inputs collected by the per-frame pipeline.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TreeInputs {
    pub lateral_safe: bool,
    /// Any missed object whose center lies in a lane adjacent to ego's.
    pub missed_adjacent: bool,
    /// Missed objects within the detected lane corridor.
    pub in_lane_misses: Vec<InLaneMiss>,
}

/// Power-mean fusion on the score deficits:
/// `1 - (((1-s_obj)^p + (1-s_lane)^p) / 2)^(1/p)`. Larger p weighs the
/// worse input more heavily.
pub fn power_mean_fuse(s_obj: f64, s_lane: f64, p: f64) -> f64 {
    let a = (1.0 - s_obj).max(0.0);
    let b = (1.0 - s_lane).max(0.0);
    let mean = ((a.powf(p) + b.powf(p)) / 2.0).powf(1.0 / p);
    (1.0 - mean).clamp(0.0, 1.0)
}

/// Exhaustive, mutually exclusive case selection. On the B1 level a
/// road-located miss dominates sidewalk misses.
pub fn classify_tree_case(
    lateral_safe: bool,
    missed_adjacent: bool,
    in_lane_misses: &[InLaneMiss],
) -> TreeCase {
    if lateral_safe {
        if missed_adjacent {
            TreeCase::A1
        } else {
            TreeCase::A2
        }
    } else if in_lane_misses.is_empty() {
        TreeCase::B2
    } else if in_lane_misses.iter().any(|m| m.location == MissLocation::Road) {
        TreeCase::B1_2
    } else {
        TreeCase::B1_1
    }
}

/// Bonus adjustment for cases A1 and B2:
/// `s_p + (f_b - 1)(1 - s_p)` for `f_b > 1`, `f_b * s_p` for `f_b < 1`,
/// unchanged otherwise; clamped to [0, 1].
pub fn apply_bonus(s_p: f64, f_b: f64) -> f64 {
    let adjusted = if f_b > 1.0 {
        s_p + (f_b - 1.0) * (1.0 - s_p)
    } else if f_b < 1.0 {
        s_p - (1.0 - f_b) * s_p
    } else {
        s_p
    };
    adjusted.clamp(0.0, 1.0)
}

/// Penalty factor from the lowest TTC over missed in-lane objects,
/// linear inside each band: [0, 2] s onto [0.6, 0.8], (2, 4] s onto
/// (0.8, 0.9], (4, 8] s onto (0.9, 1.0], above 8 s no penalty.
pub fn penalty_factor(ttc_min: f64) -> f64 {
    let t = ttc_min.max(0.0);
    if t <= 2.0 {
        0.6 + 0.2 * (t / 2.0)
    } else if t <= 4.0 {
        0.8 + 0.1 * ((t - 2.0) / 2.0)
    } else if t <= 8.0 {
        0.9 + 0.1 * ((t - 4.0) / 4.0)
    } else {
        1.0
    }
}

/// Penalty adjustment for cases B1.1 and B1.2: the factor scales the
/// power-mean score.
pub fn apply_penalty(s_p: f64, ttc_min: f64) -> f64 {
    (penalty_factor(ttc_min) * s_p).clamp(0.0, 1.0)
}

/// Five-level classification bands: [0, 0.2] insufficient,
/// (0.2, 0.4] very bad, (0.4, 0.6] bad, (0.6, 0.8] good,
/// (0.8, 1.0] very good.
pub fn classify_label(s_f: f64) -> SafetyLabel {
    if s_f <= 0.2 {
        SafetyLabel::Insufficient
    } else if s_f <= 0.4 {
        SafetyLabel::VeryBad
    } else if s_f <= 0.6 {
        SafetyLabel::Bad
    } else if s_f <= 0.8 {
        SafetyLabel::Good
    } else {
        SafetyLabel::VeryGood
    }
}

/// Full per-frame combination: fuse, pick the tree case, adjust and
/// classify. Penalty cases with no predicted contact among the misses
/// degrade to a factor of 1.0 (the case is still recorded).
pub fn final_safety(s_obj: f64, s_lane: f64, tree: &TreeInputs, params: &MetricParams) -> SafetyBreakdown {
    let s_p = power_mean_fuse(s_obj, s_lane, params.power_mean_p);
    let tree_case = classify_tree_case(tree.lateral_safe, tree.missed_adjacent, &tree.in_lane_misses);
    let (adjustment, s_f) = match tree_case {
        TreeCase::A1 | TreeCase::B2 => {
            let f_b = params.bonus_factor;
            (Adjustment::Bonus { factor: f_b }, apply_bonus(s_p, f_b))
        }
        TreeCase::A2 => (Adjustment::None, s_p),
        TreeCase::B1_1 | TreeCase::B1_2 => {
            let ttc_min = tree
                .in_lane_misses
                .iter()
                .filter_map(|m| m.ttc)
                .fold(f64::INFINITY, f64::min);
            let ttc_min = (ttc_min.is_finite()).then_some(ttc_min);
            let factor = ttc_min.map(penalty_factor).unwrap_or(1.0);
            (
                Adjustment::Penalty { factor, ttc_min },
                (factor * s_p).clamp(0.0, 1.0),
            )
        }
    };
    SafetyBreakdown {
        s_obj,
        s_lane,
        s_p,
        tree_case,
        adjustment,
        s_f,
        label: classify_label(s_f),
    }
}

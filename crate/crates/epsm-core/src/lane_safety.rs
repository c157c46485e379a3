//! Lane safety score from longitudinal, lateral and scenario-semantic
//! ratings of the detected ego-lane centerline.

use crate::error::{Error, Result};
use crate::geometry::{point_polyline_distance, resample_polyline, Vec2};
use crate::scenario::{LaneMap, LaneRelation, ObjectState};

/// Arc-length spacing for lateral-deviation correspondences.
pub const LATERAL_SAMPLE_SPACING_M: f64 = 0.5;

/// Driver reaction time assumed by the required-distance model.
pub const REACTION_TIME_S: f64 = 1.0;

/// Component ratings and the combined lane safety score for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LaneSafetyBreakdown {
    pub s_long: f64,
    pub d_lat_mean: f64,
    pub s_lat: f64,
    /// Scenario-semantic rating; present iff the lateral rating
    /// triggered (`lateral_safe == false`).
    pub s_sem: Option<f64>,
    pub s_lane: f64,
    pub lateral_safe: bool,
}

/// Mean perpendicular deviation of the detected centerline from the
/// ground truth, over correspondence points resampled every 0.5 m of
/// detected arc length.
pub fn mean_lateral_deviation(gt_centerline: &[Vec2], det_centerline: &[Vec2]) -> Result<f64> {
    if det_centerline.len() < 2 {
        return Err(Error::EmptyDetection("detected centerline needs at least 2 points"));
    }
    if gt_centerline.len() < 2 {
        return Err(Error::EmptyDetection("ground-truth centerline needs at least 2 points"));
    }
    let samples = resample_polyline(det_centerline, LATERAL_SAMPLE_SPACING_M);
    let sum: f64 = samples
        .iter()
        .map(|p| point_polyline_distance(*p, gt_centerline))
        .sum();
    Ok(sum / samples.len() as f64)
}

/// Lateral rating. The threshold is half the width margin between lane
/// and vehicle; a mean deviation below 80% of it rates in (0.8, 1.0]
/// (linear), anything at or above caps the rating at 0.8 and triggers
/// the scenario-semantic branch.
// negated comparisons are deliberate: NaN must fail the precondition
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn lateral_rating(d_mean: f64, lane_width: f64, vehicle_width: f64) -> Result<(f64, bool)> {
    if !(vehicle_width > 0.0) || !(lane_width > vehicle_width) {
        return Err(Error::Geometry(format!(
            "vehicle width {vehicle_width} must be positive and below lane width {lane_width}"
        )));
    }
    let th_lat = (lane_width - vehicle_width) / 2.0;
    let trigger = 0.8 * th_lat;
    if d_mean < trigger {
        Ok((1.0 - 0.2 * (d_mean / trigger), true))
    } else {
        Ok((0.8, false))
    }
}

/// Longitudinal rating: detected range against the distance needed to
/// react and brake from the current speed (`v^2 / (2 a) + v t_react`).
pub fn longitudinal_rating(detected_range: f64, ego_speed: f64, brake_decel: f64) -> f64 {
    let required = ego_speed * ego_speed / (2.0 * brake_decel) + ego_speed * REACTION_TIME_S;
    if required <= 0.0 {
        return 1.0;
    }
    (detected_range / required).min(1.0)
}

const KMH_BANDS: [f64; 3] = [30.0, 60.0, 100.0];

/// Scenario-semantic rating, evaluated when the lateral rating
/// triggered. If the detected centerline would carry the vehicle
/// footprint into an oncoming lane, the closing speed (ego speed plus
/// the oncoming speed limit) selects one of four severity bands mapped
/// linearly onto [0.6, 0.8], [0.4, 0.6), [0.2, 0.4) and [0.0, 0.2).
/// No intrusion rates the band-free best of 0.8.
pub fn semantic_rating(ego: &ObjectState, map: &LaneMap, det_centerline: &[Vec2]) -> f64 {
    let oncoming: Vec<_> = map
        .adjacent
        .iter()
        .filter(|adj| adj.relation == LaneRelation::Oncoming)
        .collect();
    if oncoming.is_empty() || det_centerline.len() < 2 {
        return 0.8;
    }
    let samples = resample_polyline(det_centerline, LATERAL_SAMPLE_SPACING_M);
    let intrudes = samples.iter().any(|p| {
        oncoming.iter().any(|adj| {
            let clearance = point_polyline_distance(*p, &adj.lane.centerline_m);
            clearance < adj.lane.width_m / 2.0 + ego.width_m / 2.0
        })
    });
    if !intrudes {
        return 0.8;
    }
    let v_rel_kmh = (ego.speed() + map.speed_limit_mps) * crate::severity::MPS_TO_KMH;
    semantic_band_score(v_rel_kmh)
}

/// Linear interpolation inside the four closing-speed bands; continuous
/// and non-increasing in the closing speed, hitting 0 at 200 km/h.
fn semantic_band_score(v_rel_kmh: f64) -> f64 {
    let v = v_rel_kmh.max(0.0);
    if v < KMH_BANDS[0] {
        0.8 - 0.2 * (v / KMH_BANDS[0])
    } else if v < KMH_BANDS[1] {
        0.6 - 0.2 * ((v - KMH_BANDS[0]) / (KMH_BANDS[1] - KMH_BANDS[0]))
    } else if v < KMH_BANDS[2] {
        0.4 - 0.2 * ((v - KMH_BANDS[1]) / (KMH_BANDS[2] - KMH_BANDS[1]))
    } else {
        (0.2 - 0.2 * ((v - KMH_BANDS[2]) / 100.0)).max(0.0)
    }
}

/// Combines the component ratings: a safe lateral detection multiplies
/// the longitudinal and lateral ratings; a triggered lateral rating is
/// replaced by the scenario-semantic rating.
pub fn lane_safety_score(
    s_long: f64,
    s_lat: f64,
    lateral_safe: bool,
    s_sem: Option<f64>,
    d_lat_mean: f64,
) -> LaneSafetyBreakdown {
    let (s_sem, s_lane) = if lateral_safe {
        (None, s_long * s_lat)
    } else {
        let sem = s_sem.unwrap_or(0.8);
        (Some(sem), s_long * sem)
    };
    LaneSafetyBreakdown {
        s_long,
        d_lat_mean,
        s_lat,
        s_sem,
        s_lane: s_lane.clamp(0.0, 1.0),
        lateral_safe,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{AdjacentLane, LaneRecord, ObjectClass};

    const EPS: f64 = 1e-12;

    fn straight(y: f64, len: f64) -> Vec<Vec2> {
        vec![Vec2::new(0.0, y), Vec2::new(len, y)]
    }

    #[test]
    fn deviation_zero_for_identical_lines() {
        let gt = straight(0.0, 50.0);
        assert!(mean_lateral_deviation(&gt, &gt).unwrap().abs() < EPS);
    }

    #[test]
    fn deviation_equals_constant_offset() {
        let gt = straight(0.0, 50.0);
        let det = straight(0.3, 50.0);
        let d = mean_lateral_deviation(&gt, &det).unwrap();
        assert!((d - 0.3).abs() < EPS);
    }

    #[test]
    fn deviation_of_linear_ramp_is_half() {
        let gt = straight(0.0, 50.0);
        let det: Vec<Vec2> = (0..=100)
            .map(|i| {
                let x = i as f64 * 0.5;
                Vec2::new(x, x / 50.0)
            })
            .collect();
        let d = mean_lateral_deviation(&gt, &det).unwrap();
        assert!((d - 0.5).abs() < 0.01, "ramp mean {d}");
    }

    #[test]
    fn deviation_requires_detection() {
        let gt = straight(0.0, 50.0);
        assert!(matches!(
            mean_lateral_deviation(&gt, &[]),
            Err(Error::EmptyDetection(_))
        ));
    }

    #[test]
    fn lateral_rating_cases() {
        // lane 3.5 m, vehicle 1.9 m: th_lat = 0.8 m, trigger at 0.64 m
        let (s, safe) = lateral_rating(0.0, 3.5, 1.9).unwrap();
        assert_eq!((s, safe), (1.0, true));
        let (s, safe) = lateral_rating(0.32, 3.5, 1.9).unwrap();
        assert!((s - 0.9).abs() < EPS);
        assert!(safe);
        // exactly-representable widths for the boundary: th_lat = 1.0,
        // trigger = 0.8, and a mean deviation right on it
        let (s, safe) = lateral_rating(0.8, 3.5, 1.5).unwrap();
        assert_eq!((s, safe), (0.8, false));
        let (s, safe) = lateral_rating(0.9, 3.5, 1.5).unwrap();
        assert_eq!((s, safe), (0.8, false));
        assert!(lateral_rating(0.1, 1.5, 1.9).is_err());
    }

    #[test]
    fn longitudinal_rating_cases() {
        assert_eq!(longitudinal_rating(10.0, 0.0, 5.0), 1.0);
        // v = 10 m/s, a = 5: required = 10 + 10 = 20 m
        assert!((longitudinal_rating(20.0, 10.0, 5.0) - 1.0).abs() < EPS);
        assert!((longitudinal_rating(10.0, 10.0, 5.0) - 0.5).abs() < EPS);
    }

    fn map_with_oncoming() -> LaneMap {
        LaneMap {
            ego_lane: LaneRecord { centerline_m: straight(0.0, 100.0), width_m: 3.5 },
            adjacent: vec![AdjacentLane {
                relation: LaneRelation::Oncoming,
                lane: LaneRecord { centerline_m: straight(3.5, 100.0), width_m: 3.5 },
            }],
            speed_limit_mps: 50.0 / 3.6,
        }
    }

    fn ego(speed: f64) -> ObjectState {
        ObjectState {
            id: "ego".into(),
            class: ObjectClass::Car,
            position_m: Vec2::new(0.0, 0.0),
            heading_rad: 0.0,
            velocity_mps: Vec2::new(speed, 0.0),
            length_m: 4.5,
            width_m: 1.9,
            age_years: None,
        }
    }

    #[test]
    fn semantic_rating_no_intrusion() {
        let map = map_with_oncoming();
        // detected line hugging the ego centerline: no intrusion
        let det = straight(0.0, 50.0);
        assert_eq!(semantic_rating(&ego(10.0), &map, &det), 0.8);
    }

    #[test]
    fn semantic_rating_band_edges() {
        assert!((semantic_band_score(0.0) - 0.8).abs() < EPS);
        assert!((semantic_band_score(100.0) - 0.2).abs() < EPS);
        assert!((semantic_band_score(250.0) - 0.0).abs() < EPS);
        // monotone non-increasing
        let mut prev = 1.0;
        for step in 0..=300 {
            let s = semantic_band_score(step as f64);
            assert!(s <= prev + EPS);
            prev = s;
        }
    }

    #[test]
    fn semantic_rating_intrusion_uses_closing_speed() {
        let map = map_with_oncoming();
        // detected line drifted onto the oncoming lane
        let det = straight(2.8, 50.0);
        let s = semantic_rating(&ego(0.0), &map, &det);
        // closing speed = 50 km/h: second band
        assert!((s - semantic_band_score(50.0)).abs() < EPS);
        assert!((0.4..0.6 + EPS).contains(&s));
    }

    #[test]
    fn combination_rules() {
        let safe = lane_safety_score(1.0, 1.0, true, None, 0.0);
        assert_eq!(safe.s_lane, 1.0);
        assert_eq!(safe.s_sem, None);

        let unsafe_lat = lane_safety_score(1.0, 0.8, false, Some(0.5), 0.9);
        assert!((unsafe_lat.s_lane - 0.5).abs() < EPS);
        assert_eq!(unsafe_lat.s_sem, Some(0.5));

        let no_range = lane_safety_score(0.0, 1.0, true, None, 0.0);
        assert_eq!(no_range.s_lane, 0.0);

        // invariants: s_lane <= s_long; safe lateral keeps > 0.8 * s_long
        for (s_long, s_lat) in [(0.9, 0.95), (0.4, 0.85), (1.0, 0.81)] {
            let b = lane_safety_score(s_long, s_lat, true, None, 0.1);
            assert!(b.s_lane <= b.s_long + EPS);
            assert!(b.s_lane > 0.8 * b.s_long - EPS);
        }
    }
}

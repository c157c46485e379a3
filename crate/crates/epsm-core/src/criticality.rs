//! Per-object criticality scores from ego/object kinematics.
//!
//! Objects are extrapolated with constant velocity and modelled as disks
//! whose radius circumscribes the bounding box, which gives the contact
//! time (TTC) a closed quadratic form. The closest-encounter channel
//! (TTCE) covers near misses, a rear channel covers vehicles behind the
//! ego, and a proximity zone covers vulnerable road users.

use crate::scenario::{MetricParams, ObjectState};

/// Predicted interaction of two constant-velocity disks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncounterResult {
    /// Time until the disks touch; `None` when no contact is predicted.
    pub ttc: Option<f64>,
    /// Time of minimum center distance, clamped to 0 when the objects
    /// are diverging or relatively at rest.
    pub ttce: f64,
    /// Minimum surface clearance (center distance minus both radii),
    /// floored at 0.
    pub d_ttce: f64,
}

/// Relative-kinematics encounter of two objects. Symmetric in its
/// arguments: only the relative position and velocity enter.
pub fn encounter(ego: &ObjectState, obj: &ObjectState) -> EncounterResult {
    let dp = obj.position_m - ego.position_m;
    let dv = obj.velocity_mps - ego.velocity_mps;
    let radius = ego.disk_radius() + obj.disk_radius();

    let dist0 = dp.norm();
    let speed2 = dv.norm_squared();

    if speed2 == 0.0 {
        // relatively at rest: the present distance is the closest there is
        let ttc = if dist0 <= radius { Some(0.0) } else { None };
        return EncounterResult {
            ttc,
            ttce: 0.0,
            d_ttce: (dist0 - radius).max(0.0),
        };
    }

    // closest approach of the centers
    let t_star = (-dp.dot(dv) / speed2).max(0.0);
    let closest = dp + dv * t_star;
    let min_dist = closest.norm();

    // contact: |dp + t dv| = radius, smallest root with t >= 0
    let ttc = if dist0 <= radius {
        Some(0.0)
    } else {
        let a = speed2;
        let b = 2.0 * dp.dot(dv);
        let c = dp.norm_squared() - radius * radius;
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let t = (-b - disc.sqrt()) / (2.0 * a);
            (t >= 0.0).then_some(t)
        } else {
            None
        }
    };

    EncounterResult {
        ttc,
        ttce: t_star,
        d_ttce: (min_dist - radius).max(0.0),
    }
}

fn sigmoid(value: f64, falloff: f64, k: f64) -> f64 {
    1.0 / (1.0 + (k * (value - falloff)).exp())
}

/// Maps a time-to-collision onto a criticality score via
/// `1 / (1 + exp(k (ttc - t_falloff)))`; no predicted contact scores 0.
pub fn criticality_from_ttc(ttc: Option<f64>, params: &MetricParams) -> f64 {
    match ttc {
        Some(t) => sigmoid(t, params.t_falloff_s, params.k_sigmoid),
        None => 0.0,
    }
}

/// Near-miss criticality: the larger of the encounter-time sigmoid and
/// the clearance sigmoid (falloff `d_falloff_m`).
///
/// `ttce == 0` marks a clamped encounter (diverging or relatively at
/// rest); the time term is skipped there and the present clearance
/// alone carries the risk. Without that rule every object would score
/// as critical at the moment it is passed, however far away it is.
pub fn criticality_from_ttce(ttce: f64, d_ttce: f64, params: &MetricParams) -> f64 {
    let time_term = if ttce > 0.0 {
        sigmoid(ttce, params.t_falloff_s, params.k_sigmoid)
    } else {
        0.0
    };
    let distance_term = sigmoid(d_ttce, params.d_falloff_m, params.k_sigmoid);
    time_term.max(distance_term)
}

fn encounter_criticality(enc: &EncounterResult, params: &MetricParams) -> f64 {
    criticality_from_ttc(enc.ttc, params).max(criticality_from_ttce(enc.ttce, enc.d_ttce, params))
}

/// Rear-end channel: rated from the perspective of a vehicle behind the
/// ego (strictly in the rear half-plane of the ego heading); objects
/// ahead score 0.
pub fn rear_criticality(ego: &ObjectState, obj: &ObjectState, params: &MetricParams) -> f64 {
    let heading = crate::geometry::Vec2::from_heading(ego.heading_rad);
    let behind = (obj.position_m - ego.position_m).dot(heading) < 0.0;
    if !behind {
        return 0.0;
    }
    let enc = encounter(obj, ego);
    encounter_criticality(&enc, params)
}

/// VRU criticality: 1.0 inside the circular zone of radius four times
/// the VRU speed (half the eight-speeds diameter), otherwise the
/// near-miss channel. The zone boundary uses a strict inequality.
pub fn vru_criticality(ego: &ObjectState, vru: &ObjectState, params: &MetricParams) -> f64 {
    let zone_radius = 4.0 * vru.speed();
    let distance = ego.position_m.distance(vru.position_m);
    if distance < zone_radius {
        return 1.0;
    }
    let enc = encounter(ego, vru);
    criticality_from_ttce(enc.ttce, enc.d_ttce, params)
}

/// Final per-object criticality: the VRU rule for pedestrians/cyclists,
/// otherwise the maximum of the TTC, TTCE and rear channels.
pub fn object_criticality(ego: &ObjectState, obj: &ObjectState, params: &MetricParams) -> f64 {
    if obj.class.is_vru() {
        return vru_criticality(ego, obj, params);
    }
    let enc = encounter(ego, obj);
    criticality_from_ttc(enc.ttc, params)
        .max(criticality_from_ttce(enc.ttce, enc.d_ttce, params))
        .max(rear_criticality(ego, obj, params))
}

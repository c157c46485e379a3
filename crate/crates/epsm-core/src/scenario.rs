//! Scenario data model, document format and validation.
//!
//! A scenario is a single self-describing JSON document: time-indexed
//! ground-truth world states plus per-frame detection sets, a lane map,
//! metric parameters and an optional sensor-model section. Field names
//! carry explicit units (`_m`, `_mps`, `_s`, `_rad`).

use crate::error::{Error, Result};
use crate::geometry::{arc_length, Vec2};
use crate::sensor::SensorConfig;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::path::Path;

/// Object classes distinguished by the metric. Pedestrians and cyclists
/// are vulnerable road users; the rest are vehicles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectClass {
    Car,
    Truck,
    Motorcycle,
    Cyclist,
    Pedestrian,
}

impl ObjectClass {
    pub fn is_vru(self) -> bool {
        matches!(self, ObjectClass::Pedestrian | ObjectClass::Cyclist)
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ObjectClass::Car => "car",
            ObjectClass::Truck => "truck",
            ObjectClass::Motorcycle => "motorcycle",
            ObjectClass::Cyclist => "cyclist",
            ObjectClass::Pedestrian => "pedestrian",
        };
        f.write_str(s)
    }
}

/// Ground-truth state of one traffic participant at one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub id: String,
    pub class: ObjectClass,
    pub position_m: Vec2,
    pub heading_rad: f64,
    pub velocity_mps: Vec2,
    pub length_m: f64,
    pub width_m: f64,
    /// Age in years; only meaningful for pedestrians/cyclists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age_years: Option<f64>,
}

impl ObjectState {
    pub fn speed(&self) -> f64 {
        self.velocity_mps.norm()
    }

    /// Radius of the disk that circumscribes the bounding box.
    pub fn disk_radius(&self) -> f64 {
        0.5 * self.length_m.hypot(self.width_m)
    }

    pub fn footprint(&self) -> crate::geometry::OrientedBox {
        crate::geometry::OrientedBox {
            center: self.position_m,
            heading: self.heading_rad,
            length: self.length_m,
            width: self.width_m,
        }
    }
}

/// One detected bounding box emitted by a (real or simulated) detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectedBox {
    pub class: ObjectClass,
    pub position_m: Vec2,
    pub heading_rad: f64,
    pub length_m: f64,
    pub width_m: f64,
    pub confidence: f64,
}

impl DetectedBox {
    pub fn footprint(&self) -> crate::geometry::OrientedBox {
        crate::geometry::OrientedBox {
            center: self.position_m,
            heading: self.heading_rad,
            length: self.length_m,
            width: self.width_m,
        }
    }
}

/// Detector output for one frame: boxes plus an optional detected
/// ego-lane centerline.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DetectionSet {
    #[serde(default)]
    pub boxes: Vec<DetectedBox>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lane_pts_m: Option<Vec<Vec2>>,
}

impl DetectionSet {
    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty() && self.lane_pts_m.is_none()
    }
}

/// One time step: ground truth plus detections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t_s: f64,
    pub ego: ObjectState,
    #[serde(default)]
    pub objects: Vec<ObjectState>,
    #[serde(default)]
    pub detections: DetectionSet,
}

/// Relation of an adjacent lane to the ego lane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaneRelation {
    SameDirection,
    Oncoming,
    Sidewalk,
}

/// Centerline plus width of one lane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneRecord {
    pub centerline_m: Vec<Vec2>,
    pub width_m: f64,
}

impl LaneRecord {
    /// Whether a point lies within the lane corridor (centerline +- width/2).
    pub fn contains(&self, p: Vec2) -> bool {
        crate::geometry::point_polyline_distance(p, &self.centerline_m) <= self.width_m / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjacentLane {
    pub relation: LaneRelation,
    #[serde(flatten)]
    pub lane: LaneRecord,
}

/// Minimal self-contained lane/map model: the ego lane, its neighbours
/// and the posted speed limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneMap {
    pub ego_lane: LaneRecord,
    #[serde(default)]
    pub adjacent: Vec<AdjacentLane>,
    pub speed_limit_mps: f64,
}

/// Metric parameters. Defaults reproduce the documented experimental
/// setup (power mean p = 5, IoU 0.7 vehicle / 0.5 VRU, 50 m detection
/// distance, bonus factor 1.1, sigmoid k = 3 with 2.5 s / 4.5 m falloffs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricParams {
    pub power_mean_p: f64,
    pub iou_threshold_vehicle: f64,
    pub iou_threshold_vru: f64,
    pub detection_distance_m: f64,
    pub bonus_factor: f64,
    pub k_sigmoid: f64,
    pub t_falloff_s: f64,
    pub d_falloff_m: f64,
    pub brake_decel_mps2: f64,
    pub lane_match_threshold_m: f64,
    pub vru_default_age_years: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            power_mean_p: 5.0,
            iou_threshold_vehicle: 0.7,
            iou_threshold_vru: 0.5,
            detection_distance_m: 50.0,
            bonus_factor: 1.1,
            k_sigmoid: 3.0,
            t_falloff_s: 2.5,
            d_falloff_m: 4.5,
            brake_decel_mps2: 5.0,
            lane_match_threshold_m: 0.5,
            vru_default_age_years: 30.0,
        }
    }
}

/// A complete scenario document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub id: String,
    #[serde(default)]
    pub params: MetricParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensor: Option<SensorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub colliding_ids: Option<(String, String)>,
    pub map: LaneMap,
    pub frames: Vec<Frame>,
}

/// One violated invariant, with enough locus to find it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Frame index, when the violation is frame-local.
    pub frame: Option<usize>,
    /// Offending entity id, when one exists.
    pub entity: Option<String>,
    /// Stable rule name, e.g. `monotone_time` or `age_range`.
    pub rule: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.rule)?;
        if let Some(frame) = self.frame {
            write!(f, " frame {frame}")?;
        }
        if let Some(entity) = &self.entity {
            write!(f, " entity `{entity}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

fn violation(
    frame: Option<usize>,
    entity: Option<&str>,
    rule: &'static str,
    message: impl Into<String>,
) -> Violation {
    Violation {
        frame,
        entity: entity.map(str::to_owned),
        rule,
        message: message.into(),
    }
}

/// Tolerance for the constant-frame-rate invariant.
const FRAME_RATE_TOLERANCE_S: f64 = 1e-9;

impl Scenario {
    /// Checks every model invariant. Total: never panics, returns the
    /// full list of violations (empty when the scenario is valid).
    // negated comparisons are deliberate: NaN must fail every check
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let pi = std::f64::consts::PI;

        let check_object = |frame: usize, obj: &ObjectState, out: &mut Vec<Violation>| {
            if !(obj.length_m > 0.0) || !(obj.width_m > 0.0) {
                out.push(violation(
                    Some(frame),
                    Some(&obj.id),
                    "positive_extent",
                    format!("length {} / width {} must be > 0", obj.length_m, obj.width_m),
                ));
            }
            if !(-pi..pi).contains(&obj.heading_rad) {
                out.push(violation(
                    Some(frame),
                    Some(&obj.id),
                    "heading_range",
                    format!("heading {} outside [-pi, pi)", obj.heading_rad),
                ));
            }
            if let Some(age) = obj.age_years {
                if !(0.0..=120.0).contains(&age) {
                    out.push(violation(
                        Some(frame),
                        Some(&obj.id),
                        "age_range",
                        format!("age {age} outside [0, 120]"),
                    ));
                }
            }
            if !obj.position_m.x.is_finite()
                || !obj.position_m.y.is_finite()
                || !obj.velocity_mps.x.is_finite()
                || !obj.velocity_mps.y.is_finite()
            {
                out.push(violation(
                    Some(frame),
                    Some(&obj.id),
                    "finite_state",
                    "position/velocity must be finite",
                ));
            }
        };

        let mut seen_ids: HashSet<String> = HashSet::new();
        let mut prev_t: Option<f64> = None;
        let mut prev_dt: Option<f64> = None;
        for (i, frame) in self.frames.iter().enumerate() {
            if !(frame.t_s >= 0.0) {
                out.push(violation(Some(i), None, "nonnegative_time", format!("t = {}", frame.t_s)));
            }
            if let Some(prev) = prev_t {
                let dt = frame.t_s - prev;
                if dt <= 0.0 {
                    out.push(violation(
                        Some(i),
                        None,
                        "monotone_time",
                        format!("t {} does not increase over {}", frame.t_s, prev),
                    ));
                } else {
                    if let Some(pdt) = prev_dt {
                        if (dt - pdt).abs() > FRAME_RATE_TOLERANCE_S {
                            out.push(violation(
                                Some(i),
                                None,
                                "constant_frame_rate",
                                format!("frame step {dt} differs from {pdt}"),
                            ));
                        }
                    }
                    prev_dt = Some(dt);
                }
            }
            prev_t = Some(frame.t_s);

            check_object(i, &frame.ego, &mut out);
            seen_ids.insert(frame.ego.id.clone());
            let mut frame_ids: HashSet<&str> = HashSet::new();
            for obj in &frame.objects {
                check_object(i, obj, &mut out);
                seen_ids.insert(obj.id.clone());
                if obj.id == frame.ego.id {
                    out.push(violation(
                        Some(i),
                        Some(&obj.id),
                        "ego_id_distinct",
                        "ego id reused by a ground-truth object",
                    ));
                }
                if !frame_ids.insert(&obj.id) {
                    out.push(violation(
                        Some(i),
                        Some(&obj.id),
                        "unique_ids",
                        "duplicate object id within one frame",
                    ));
                }
            }

            for (bi, b) in frame.detections.boxes.iter().enumerate() {
                if !(0.0..=1.0).contains(&b.confidence) {
                    out.push(violation(
                        Some(i),
                        Some(&format!("box#{bi}")),
                        "confidence_range",
                        format!("confidence {} outside [0, 1]", b.confidence),
                    ));
                }
            }
            if let Some(lane) = &frame.detections.lane_pts_m {
                if lane.len() < 2 {
                    out.push(violation(
                        Some(i),
                        None,
                        "lane_polyline",
                        "detected lane needs at least 2 points",
                    ));
                } else if lane.windows(2).any(|w| w[0].distance(w[1]) <= 0.0) {
                    out.push(violation(
                        Some(i),
                        None,
                        "lane_polyline",
                        "detected lane arc length must strictly increase",
                    ));
                }
            }
        }

        let check_lane = |name: String, lane: &LaneRecord, out: &mut Vec<Violation>| {
            if lane.centerline_m.len() < 2 {
                out.push(violation(
                    None,
                    Some(&name),
                    "centerline_points",
                    "lane centerline needs at least 2 points",
                ));
            }
            if !(lane.width_m > 0.0) {
                out.push(violation(
                    None,
                    Some(&name),
                    "lane_width",
                    format!("width {} must be > 0", lane.width_m),
                ));
            }
        };
        check_lane("ego_lane".into(), &self.map.ego_lane, &mut out);
        for (i, adj) in self.map.adjacent.iter().enumerate() {
            check_lane(format!("adjacent#{i}"), &adj.lane, &mut out);
        }

        let p = &self.params;
        let positive = [
            ("detection_distance_m", p.detection_distance_m),
            ("k_sigmoid", p.k_sigmoid),
            ("t_falloff_s", p.t_falloff_s),
            ("d_falloff_m", p.d_falloff_m),
            ("brake_decel_mps2", p.brake_decel_mps2),
            ("lane_match_threshold_m", p.lane_match_threshold_m),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                out.push(violation(None, None, "params_range", format!("{name} = {value} must be > 0")));
            }
        }
        if !(p.power_mean_p >= 1.0) {
            out.push(violation(None, None, "params_range", format!("power_mean_p = {} must be >= 1", p.power_mean_p)));
        }
        for (name, value) in [
            ("iou_threshold_vehicle", p.iou_threshold_vehicle),
            ("iou_threshold_vru", p.iou_threshold_vru),
        ] {
            if !(value > 0.0 && value <= 1.0) {
                out.push(violation(None, None, "params_range", format!("{name} = {value} outside (0, 1]")));
            }
        }

        if let Some((a, b)) = &self.colliding_ids {
            for id in [a, b] {
                if !seen_ids.contains(id) {
                    out.push(violation(
                        None,
                        Some(id),
                        "colliding_ids_exist",
                        "colliding id never appears in any frame",
                    ));
                }
            }
        }

        if let Some(sensor) = &self.sensor {
            for v in sensor.validate() {
                out.push(violation(None, None, v.0, v.1));
            }
        }

        out
    }

    /// Frames in timestamp order. Valid scenarios are stored sorted, so
    /// this sorts only as a safeguard when invariants were bypassed.
    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        let mut order: Vec<usize> = (0..self.frames.len()).collect();
        order.sort_by(|&a, &b| {
            self.frames[a]
                .t_s
                .partial_cmp(&self.frames[b].t_s)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        order.into_iter().map(move |i| &self.frames[i])
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serialization cannot fail")
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Scenario> {
        let scenario: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let violations = scenario.validate();
        if violations.is_empty() {
            Ok(scenario)
        } else {
            Err(Error::Validation {
                scenario_id: scenario.id.clone(),
                violations,
            })
        }
    }
}

/// Loads and fully validates a scenario document.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::from_json(&text, &path.display().to_string())
}

/// Writes a scenario document (pretty-printed JSON).
pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_json()).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Arc length of the detected lane polyline, used as the detected range.
pub fn detected_lane_range(lane: &[Vec2]) -> f64 {
    arc_length(lane)
}

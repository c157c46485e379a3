//! Seeded statistical sensor models for lane and object detection.
//!
//! Both models draw from counter-based random streams keyed on
//! (scenario id, frame index, channel, master seed), so simulation is
//! bit-exact regardless of evaluation order or thread count.

use crate::error::{Error, Result};
use crate::geometry::{
    point_at_arc, point_polyline_distance, project_onto_polyline, resample_polyline,
    tangent_at_arc, wrap_angle, Vec2,
};
use crate::scenario::{DetectedBox, DetectionSet, LaneMap, ObjectClass, ObjectState, Scenario};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Sampling step for the simulated lane centerline.
pub const LANE_SAMPLE_SPACING_M: f64 = 0.5;

/// One step of the piecewise-constant detection-probability curve:
/// distances below `max_distance_m` (and above the previous bin edge)
/// are detected with `probability`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbBin {
    pub max_distance_m: f64,
    pub probability: f64,
}

/// Configuration of the statistical sensor pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    pub seed: u64,
    pub max_lane_distance_m: f64,
    pub lane_noise_sigma_m: f64,
    pub detect_prob_curve: Vec<ProbBin>,
    /// Relative (fractional) sigma applied to box length and width.
    pub bbox_size_jitter_sigma: f64,
    pub heading_jitter_sigma_rad: f64,
    /// Objects that are never detected, regardless of the curve.
    pub force_miss_ids: Vec<String>,
    /// Per-frame probability of one spurious detection (0 disables).
    pub ghost_rate: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        SensorConfig {
            seed: 0,
            max_lane_distance_m: 50.0,
            lane_noise_sigma_m: 0.05,
            detect_prob_curve: default_prob_curve(),
            bbox_size_jitter_sigma: 0.05,
            heading_jitter_sigma_rad: 2.0_f64.to_radians(),
            force_miss_ids: Vec::new(),
            ghost_rate: 0.0,
        }
    }
}

/// Documented default distance/probability curve. Beyond the last bin the
/// detection probability is zero.
pub fn default_prob_curve() -> Vec<ProbBin> {
    [
        (10.0, 0.98),
        (20.0, 0.95),
        (30.0, 0.90),
        (40.0, 0.80),
        (50.0, 0.65),
    ]
    .into_iter()
    .map(|(max_distance_m, probability)| ProbBin { max_distance_m, probability })
    .collect()
}

impl SensorConfig {
    /// Detection probability at an ego distance (piecewise constant,
    /// zero beyond the last bin).
    pub fn detect_probability(&self, distance: f64) -> f64 {
        for bin in &self.detect_prob_curve {
            if distance < bin.max_distance_m {
                return bin.probability;
            }
        }
        0.0
    }

    /// Invariant check used by scenario validation: probabilities in
    /// [0, 1], strictly increasing bin edges, non-negative sigmas.
    // negated comparisons are deliberate: NaN must fail every check
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut prev = 0.0;
        for bin in &self.detect_prob_curve {
            if !(0.0..=1.0).contains(&bin.probability) {
                out.push(("sensor_probability", format!("probability {} outside [0, 1]", bin.probability)));
            }
            if bin.max_distance_m <= prev {
                out.push(("sensor_bins", format!("bin edge {} not increasing", bin.max_distance_m)));
            }
            prev = bin.max_distance_m;
        }
        for (name, sigma) in [
            ("lane_noise_sigma_m", self.lane_noise_sigma_m),
            ("bbox_size_jitter_sigma", self.bbox_size_jitter_sigma),
            ("heading_jitter_sigma_rad", self.heading_jitter_sigma_rad),
        ] {
            if !(sigma >= 0.0) {
                out.push(("sensor_sigma", format!("{name} = {sigma} must be >= 0")));
            }
        }
        if !(0.0..=1.0).contains(&self.ghost_rate) {
            out.push(("sensor_probability", format!("ghost_rate {} outside [0, 1]", self.ghost_rate)));
        }
        if !(self.max_lane_distance_m > 0.0) {
            out.push(("sensor_range", format!("max_lane_distance_m = {} must be > 0", self.max_lane_distance_m)));
        }
        out
    }
}

/// Independent random channels per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RngChannel {
    Lane,
    Object,
}

/// Deterministic stream for one (scenario, frame, channel, seed) tuple.
/// Streams for distinct tuples are independent; the same tuple always
/// reproduces the same draws.
pub fn rng_stream_for(scenario_id: &str, frame_index: u64, channel: RngChannel, seed: u64) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((scenario_id.len() as u64).to_le_bytes());
    hasher.update(scenario_id.as_bytes());
    hasher.update(frame_index.to_le_bytes());
    hasher.update([match channel {
        RngChannel::Lane => 0u8,
        RngChannel::Object => 1u8,
    }]);
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha8Rng::from_seed(digest)
}

/// How far a sight line may leave the lane corridor before the view is
/// considered blocked by the inner side of a curve.
const OCCLUSION_SLACK_M: f64 = 1e-6;

/// Samples the ground-truth ego-lane centerline ahead of the ego at
/// 0.5 m spacing, cut at `max_lane_distance_m` or at the first
/// line-of-sight break, and perturbs each point laterally with
/// N(0, lane_noise_sigma^2).
///
/// Returns `None` when fewer than two points remain visible.
pub fn simulate_lane_detection(
    map: &LaneMap,
    ego: &ObjectState,
    cfg: &SensorConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Vec<Vec2>>> {
    let centerline = &map.ego_lane.centerline_m;
    let lateral = point_polyline_distance(ego.position_m, centerline);
    if lateral > map.ego_lane.width_m / 2.0 {
        return Err(Error::OffMap);
    }

    let start_s = project_onto_polyline(ego.position_m, centerline);
    let total = crate::geometry::arc_length(centerline);
    let end_s = (start_s + cfg.max_lane_distance_m).min(total);

    let mut samples = Vec::new();
    let mut s = start_s;
    let half_width = map.ego_lane.width_m / 2.0;
    let eye = point_at_arc(centerline, start_s);
    while s <= end_s + 1e-9 {
        let p = point_at_arc(centerline, s.min(total));
        // line-of-sight check: the straight ray from the ego must stay
        // inside the lane corridor, otherwise the curve blocks the view
        let visible = sight_line_clear(eye, p, centerline, half_width + OCCLUSION_SLACK_M);
        if !visible {
            break;
        }
        samples.push((s.min(total), p));
        s += LANE_SAMPLE_SPACING_M;
    }

    if samples.len() < 2 {
        return Ok(None);
    }

    let noise = Normal::new(0.0, cfg.lane_noise_sigma_m.max(0.0))
        .map_err(|e| Error::Model(format!("lane noise sigma: {e}")))?;
    let mut out = Vec::with_capacity(samples.len());
    for (s_pos, p) in samples {
        let normal = tangent_at_arc(centerline, s_pos).perp();
        let delta = if cfg.lane_noise_sigma_m > 0.0 { noise.sample(rng) } else { 0.0 };
        out.push(p + normal * delta);
    }
    Ok(Some(out))
}

fn sight_line_clear(from: Vec2, to: Vec2, centerline: &[Vec2], max_offset: f64) -> bool {
    let dist = from.distance(to);
    if dist == 0.0 {
        return true;
    }
    let steps = (dist / LANE_SAMPLE_SPACING_M).ceil() as usize;
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let p = from + (to - from) * t;
        if point_polyline_distance(p, centerline) > max_offset {
            return false;
        }
    }
    true
}

/// Statistical 360-degree object detection: each ground-truth object is
/// detected with the distance-dependent curve probability; detected
/// boxes get a relative size scale of (1 + N(0, sigma^2)) and a heading
/// perturbation of N(0, sigma^2). Confidence carries the curve
/// probability at the object's distance.
pub fn simulate_object_detection(
    objects: &[ObjectState],
    ego: &ObjectState,
    cfg: &SensorConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<DetectedBox> {
    let size_noise = Normal::new(0.0, cfg.bbox_size_jitter_sigma.max(0.0)).ok();
    let heading_noise = Normal::new(0.0, cfg.heading_jitter_sigma_rad.max(0.0)).ok();
    let mut out = Vec::new();
    for obj in objects {
        if cfg.force_miss_ids.iter().any(|id| id == &obj.id) {
            continue;
        }
        let distance = obj.position_m.distance(ego.position_m);
        let p = cfg.detect_probability(distance);
        // fixed draw discipline: one uniform and two normals per object,
        // so downstream draws do not depend on detection outcomes
        let u: f64 = rng.gen();
        let scale_draw = match (&size_noise, cfg.bbox_size_jitter_sigma > 0.0) {
            (Some(n), true) => n.sample(rng),
            _ => 0.0,
        };
        let heading_draw = match (&heading_noise, cfg.heading_jitter_sigma_rad > 0.0) {
            (Some(n), true) => n.sample(rng),
            _ => 0.0,
        };
        if u < p {
            let scale = (1.0 + scale_draw).max(0.01);
            out.push(DetectedBox {
                class: obj.class,
                position_m: obj.position_m,
                heading_rad: wrap_angle(obj.heading_rad + heading_draw),
                length_m: obj.length_m * scale,
                width_m: obj.width_m * scale,
                confidence: p,
            });
        }
    }
    if cfg.ghost_rate > 0.0 {
        let u: f64 = rng.gen();
        if u < cfg.ghost_rate {
            let range = cfg
                .detect_prob_curve
                .last()
                .map(|b| b.max_distance_m)
                .unwrap_or(50.0);
            let d: f64 = rng.gen_range(5.0..range.max(5.1));
            let bearing: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            let heading: f64 = rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
            out.push(DetectedBox {
                class: ObjectClass::Car,
                position_m: ego.position_m + Vec2::from_heading(bearing) * d,
                heading_rad: heading,
                length_m: 4.5,
                width_m: 1.8,
                confidence: cfg.detect_probability(d),
            });
        }
    }
    out
}

/// Fills the detection sets of every frame from the sensor models.
/// `seed_override` replaces the config seed when given.
pub fn simulate_scenario(
    scenario: &mut Scenario,
    cfg: &SensorConfig,
    seed_override: Option<u64>,
) -> Result<()> {
    let seed = seed_override.unwrap_or(cfg.seed);
    let id = scenario.id.clone();
    let map = scenario.map.clone();
    for (index, frame) in scenario.frames.iter_mut().enumerate() {
        frame.detections = simulate_frame(&id, index as u64, frame, &map, cfg, seed)?;
    }
    Ok(())
}

/// Detections for a single frame; pure given the keyed streams.
pub fn simulate_frame(
    scenario_id: &str,
    frame_index: u64,
    frame: &crate::scenario::Frame,
    map: &LaneMap,
    cfg: &SensorConfig,
    seed: u64,
) -> Result<DetectionSet> {
    let mut lane_rng = rng_stream_for(scenario_id, frame_index, RngChannel::Lane, seed);
    let mut obj_rng = rng_stream_for(scenario_id, frame_index, RngChannel::Object, seed);
    let lane = simulate_lane_detection(map, &frame.ego, cfg, &mut lane_rng)?;
    let boxes = simulate_object_detection(&frame.objects, &frame.ego, cfg, &mut obj_rng);
    Ok(DetectionSet { boxes, lane_pts_m: lane })
}

/// Resamples a detected lane for downstream point metrics.
pub fn resample_lane(lane: &[Vec2]) -> Vec<Vec2> {
    resample_polyline(lane, LANE_SAMPLE_SPACING_M)
}

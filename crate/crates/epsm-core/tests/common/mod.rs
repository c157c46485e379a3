//! Seeded synthetic-scenario generator shared by the integration tests.

use epsm_core::geometry::{wrap_angle, Vec2};
use epsm_core::scenario::*;
use epsm_core::sensor::SensorConfig;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn object(
    rng: &mut ChaCha8Rng,
    id: &str,
    class: ObjectClass,
    position: Vec2,
    velocity: Vec2,
) -> ObjectState {
    let (length, width) = match class {
        ObjectClass::Car => (4.2 + rng.gen::<f64>() * 0.8, 1.7 + rng.gen::<f64>() * 0.3),
        ObjectClass::Truck => (6.5 + rng.gen::<f64>() * 2.0, 2.2 + rng.gen::<f64>() * 0.4),
        ObjectClass::Motorcycle => (2.0 + rng.gen::<f64>() * 0.3, 0.8),
        ObjectClass::Cyclist => (1.7 + rng.gen::<f64>() * 0.2, 0.6),
        ObjectClass::Pedestrian => (0.5, 0.5),
    };
    let heading = if velocity.norm() > 1e-9 {
        wrap_angle(velocity.y.atan2(velocity.x))
    } else {
        0.0
    };
    let age = if class.is_vru() && rng.gen_bool(0.5) {
        Some(rng.gen_range(6.0..90.0))
    } else {
        None
    };
    ObjectState {
        id: id.into(),
        class,
        position_m: position,
        heading_rad: heading,
        velocity_mps: velocity,
        length_m: length,
        width_m: width,
        age_years: age,
    }
}

/// One random but structurally valid scenario: straight three-lane road,
/// moving ego, a handful of objects with assorted classes and motions,
/// and a seeded sensor section (sometimes with a forced miss).
pub fn random_scenario(index: usize, rng: &mut ChaCha8Rng) -> Scenario {
    let frame_count = rng.gen_range(8..15);
    let dt = [0.05, 0.1, 0.25][rng.gen_range(0..3)];
    let ego_speed = rng.gen_range(5.0..20.0);
    let object_count = rng.gen_range(2..6);

    let classes = [
        ObjectClass::Car,
        ObjectClass::Truck,
        ObjectClass::Motorcycle,
        ObjectClass::Cyclist,
        ObjectClass::Pedestrian,
    ];
    // object prototypes at t = 0; per frame only the position advances
    let prototypes: Vec<ObjectState> = (0..object_count)
        .map(|j| {
            let class = classes[rng.gen_range(0..classes.len())];
            let position = Vec2::new(rng.gen_range(-30.0..80.0), rng.gen_range(-8.0..8.0));
            let speed_cap = if class == ObjectClass::Pedestrian { 2.0 } else { 18.0 };
            let velocity = if rng.gen_bool(0.2) {
                Vec2::ZERO
            } else {
                Vec2::new(
                    rng.gen_range(-speed_cap..speed_cap),
                    rng.gen_range(-speed_cap / 4.0..speed_cap / 4.0),
                )
            };
            object(rng, &format!("obj{j}"), class, position, velocity)
        })
        .collect();

    let force_miss = if rng.gen_bool(0.4) {
        vec![format!("obj{}", rng.gen_range(0..object_count))]
    } else {
        Vec::new()
    };
    let sensor = SensorConfig {
        seed: rng.gen(),
        lane_noise_sigma_m: rng.gen_range(0.02..0.12),
        force_miss_ids: force_miss,
        ..SensorConfig::default()
    };

    let frames = (0..frame_count)
        .map(|k| {
            let t = k as f64 * dt;
            let ego_pos = Vec2::new(ego_speed * t, 0.0);
            let ego = ObjectState {
                id: "ego".into(),
                class: ObjectClass::Car,
                position_m: ego_pos,
                heading_rad: 0.0,
                velocity_mps: Vec2::new(ego_speed, 0.0),
                length_m: 4.5,
                width_m: 1.8,
                age_years: None,
            };
            let objects = prototypes
                .iter()
                .map(|proto| {
                    let mut obj = proto.clone();
                    obj.position_m = proto.position_m + proto.velocity_mps * t;
                    obj
                })
                .collect();
            Frame { t_s: t, ego, objects, detections: DetectionSet::default() }
        })
        .collect();

    Scenario {
        id: format!("synthetic_{index:02}"),
        params: MetricParams::default(),
        sensor: Some(sensor),
        colliding_ids: None,
        map: LaneMap {
            ego_lane: LaneRecord {
                centerline_m: vec![Vec2::new(-60.0, 0.0), Vec2::new(500.0, 0.0)],
                width_m: 3.5,
            },
            adjacent: vec![
                AdjacentLane {
                    relation: LaneRelation::Oncoming,
                    lane: LaneRecord {
                        centerline_m: vec![Vec2::new(-60.0, 3.5), Vec2::new(500.0, 3.5)],
                        width_m: 3.5,
                    },
                },
                AdjacentLane {
                    relation: LaneRelation::Sidewalk,
                    lane: LaneRecord {
                        centerline_m: vec![Vec2::new(-60.0, -4.0), Vec2::new(500.0, -4.0)],
                        width_m: 2.5,
                    },
                },
            ],
            speed_limit_mps: 13.9,
        },
        frames,
    }
}

pub fn synthetic_corpus(count: usize, master_seed: u64) -> Vec<Scenario> {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    (0..count).map(|i| random_scenario(i, &mut rng)).collect()
}

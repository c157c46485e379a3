//! Shared builders for the benchmark suite.

use epsm_core::geometry::Vec2;
use epsm_core::scenario::*;
use epsm_core::sensor::SensorConfig;

/// A straight-road scenario with `frames` time steps and `objects`
/// co-moving ground-truth objects, sensor section attached.
pub fn bench_scenario(frames: usize, objects: usize) -> Scenario {
    let make_object = |j: usize, t: f64| -> ObjectState {
        let lane_offset = if j % 2 == 0 { -3.5 } else { 3.5 };
        ObjectState {
            id: format!("obj{j}"),
            class: if j % 5 == 4 { ObjectClass::Pedestrian } else { ObjectClass::Car },
            position_m: Vec2::new(10.0 * t + 12.0 * (j as f64 + 1.0), lane_offset),
            heading_rad: 0.0,
            velocity_mps: Vec2::new(10.0, 0.0),
            length_m: 4.4,
            width_m: 1.8,
            age_years: None,
        }
    };
    let frames = (0..frames)
        .map(|k| {
            let t = k as f64 * 0.1;
            Frame {
                t_s: t,
                ego: ObjectState {
                    id: "ego".into(),
                    class: ObjectClass::Car,
                    position_m: Vec2::new(10.0 * t, 0.0),
                    heading_rad: 0.0,
                    velocity_mps: Vec2::new(10.0, 0.0),
                    length_m: 4.5,
                    width_m: 1.8,
                    age_years: None,
                },
                objects: (0..objects).map(|j| make_object(j, t)).collect(),
                detections: DetectionSet::default(),
            }
        })
        .collect();
    Scenario {
        id: "bench".into(),
        params: MetricParams::default(),
        sensor: Some(SensorConfig { seed: 5, ..SensorConfig::default() }),
        colliding_ids: None,
        map: LaneMap {
            ego_lane: LaneRecord {
                centerline_m: vec![Vec2::new(-50.0, 0.0), Vec2::new(2000.0, 0.0)],
                width_m: 3.5,
            },
            adjacent: vec![AdjacentLane {
                relation: LaneRelation::Oncoming,
                lane: LaneRecord {
                    centerline_m: vec![Vec2::new(-50.0, 3.5), Vec2::new(2000.0, 3.5)],
                    width_m: 3.5,
                },
            }],
            speed_limit_mps: 13.9,
        },
        frames,
    }
}

//! Offline safety evaluation for automated-driving perception.
//!
//! The crate scores recorded or simulated driving scenarios with a
//! joint environmental-perception safety metric: a weighted object
//! safety score built from per-object criticality and collision
//! severity, a lane safety score built from longitudinal, lateral and
//! scenario-semantic ratings, and a power-mean fusion of the two that a
//! decision tree fine-tunes where the tasks interact. Conventional
//! performance baselines (precision/recall/F1, interpolated AP,
//! MODA/MODP, point-based lane confusion) are computed alongside, so
//! the two views can be compared frame by frame.
//!
//! Entry points:
//! - [`scenario::load_scenario`] reads and validates a scenario document
//! - [`sensor::simulate_scenario`] fills detections from the seeded
//!   statistical sensor models
//! - [`pipeline::evaluate_corpus`] produces per-frame rows plus the
//!   aggregate report

pub mod combiner;
pub mod criticality;
pub mod error;
pub mod geometry;
pub mod lane_safety;
pub mod object_safety;
pub mod perf;
pub mod pipeline;
pub mod scenario;
pub mod sensor;
pub mod severity;

pub use combiner::{SafetyBreakdown, SafetyLabel, TreeCase};
pub use error::{Error, Result};
pub use geometry::Vec2;
pub use pipeline::{FrameRow, MetricReport};
pub use scenario::{
    load_scenario, save_scenario, DetectedBox, DetectionSet, Frame, LaneMap, LaneRecord,
    LaneRelation, MetricParams, ObjectClass, ObjectState, Scenario, Violation,
};
pub use sensor::SensorConfig;
pub use severity::VehicleSeverityModel;

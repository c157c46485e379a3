//! Collision severity scores from injury-outcome regression models.
//!
//! Pedestrians (and cyclists, treated alike) use a fixed published
//! logistic regression over impact speed and age. Vehicles use a
//! configurable set of logistic models over closing speed and impact
//! direction, loaded from a TOML document (see
//! `config/severity_models.toml` for the bundled defaults and their
//! provenance notes).

use crate::error::{Error, Result};
use crate::scenario::{MetricParams, ObjectState};
use std::path::Path;

pub const MPS_TO_KMH: f64 = 3.6;

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Probability of a pedestrian fatality for an impact at `v_kmh` and a
/// pedestrian age in years: logistic(-8.0941 + 0.0012 V^2 + 0.0525 A).
pub fn pedestrian_fatality_prob(v_kmh: f64, age: f64) -> f64 {
    logistic(-8.0941 + 0.0012 * v_kmh * v_kmh + 0.0525 * age)
}

/// Probability of a pedestrian being killed or seriously injured:
/// logistic(-2.9893 + 0.0013 V^2 + 0.0286 A).
pub fn pedestrian_ksi_prob(v_kmh: f64, age: f64) -> f64 {
    logistic(-2.9893 + 0.0013 * v_kmh * v_kmh + 0.0286 * age)
}

/// Linear probability-to-severity mapping:
/// `i_min + (p - p_min) (i_max - i_min) / (p_max - p_min)`.
// negated comparisons are deliberate: NaN must fail the precondition
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn linear_map(p: f64, p_min: f64, p_max: f64, i_min: f64, i_max: f64) -> Result<f64> {
    if !(p_min < p_max) || !(i_min <= i_max) {
        return Err(Error::Domain(format!(
            "invalid mapping bands p [{p_min}, {p_max}] -> i [{i_min}, {i_max}]"
        )));
    }
    if !(p_min..=p_max).contains(&p) {
        return Err(Error::Domain(format!("p = {p} outside [{p_min}, {p_max}]")));
    }
    Ok(i_min + (p - p_min) * (i_max - i_min) / (p_max - p_min))
}

/// Upper edge of a half-open severity band: the largest double below it.
fn band_cap(upper: f64) -> f64 {
    f64::from_bits(upper.to_bits() - 1)
}

/// VRU severity from the ego speed (m/s) and the VRU age.
///
/// Band precedence: fatality probability >= 0.5 maps onto [0.8, 1.0];
/// otherwise KSI probability >= 0.5 maps onto [0.4, 0.8); otherwise the
/// KSI probability maps onto [0.0, 0.4).
pub fn vru_severity(ego_speed_mps: f64, age: f64) -> f64 {
    let v_kmh = ego_speed_mps * MPS_TO_KMH;
    let p_k = pedestrian_fatality_prob(v_kmh, age);
    if p_k >= 0.5 {
        return linear_map(p_k, 0.5, 1.0, 0.8, 1.0).expect("p_k in band");
    }
    let p_ksi = pedestrian_ksi_prob(v_kmh, age);
    if p_ksi >= 0.5 {
        let i = linear_map(p_ksi, 0.5, 1.0, 0.4, 0.8).expect("p_ksi in band");
        return i.min(band_cap(0.8));
    }
    let i = linear_map(p_ksi, 0.0, 0.5, 0.0, 0.4).expect("p_ksi in band");
    i.min(band_cap(0.4))
}

/// Category of a vehicle-vehicle impact, from the bearing of the other
/// object in the ego frame: within 45 degrees is frontal, beyond 135
/// degrees is a rear impact, anything else is a side impact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpactDirection {
    Front,
    Side,
    Rear,
}

pub fn impact_direction(ego: &ObjectState, obj: &ObjectState) -> ImpactDirection {
    let rel = obj.position_m - ego.position_m;
    let bearing = crate::geometry::wrap_angle(rel.y.atan2(rel.x) - ego.heading_rad).abs();
    let deg = bearing.to_degrees();
    if deg <= 45.0 {
        ImpactDirection::Front
    } else if deg >= 135.0 {
        ImpactDirection::Rear
    } else {
        ImpactDirection::Side
    }
}

/// Regression term over {1, V, V^2, direction indicators}.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Term {
    Intercept,
    V,
    V2,
    Front,
    Side,
    Rear,
}

impl Term {
    fn parse(name: &str) -> Result<Term> {
        Ok(match name {
            "intercept" | "1" => Term::Intercept,
            "v" => Term::V,
            "v2" => Term::V2,
            "front" => Term::Front,
            "side" => Term::Side,
            "rear" => Term::Rear,
            other => return Err(Error::Model(format!("unknown regression term `{other}`"))),
        })
    }

    fn value(self, v_kmh: f64, direction: ImpactDirection) -> f64 {
        match self {
            Term::Intercept => 1.0,
            Term::V => v_kmh,
            Term::V2 => v_kmh * v_kmh,
            Term::Front => (direction == ImpactDirection::Front) as u8 as f64,
            Term::Side => (direction == ImpactDirection::Side) as u8 as f64,
            Term::Rear => (direction == ImpactDirection::Rear) as u8 as f64,
        }
    }
}

/// One logistic regression as a list of (term, coefficient) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    terms: Vec<(Term, f64)>,
}

impl LogisticModel {
    pub fn probability(&self, v_kmh: f64, direction: ImpactDirection) -> f64 {
        let z: f64 = self
            .terms
            .iter()
            .map(|(term, coeff)| coeff * term.value(v_kmh, direction))
            .sum();
        logistic(z)
    }
}

/// The three vehicle-outcome regressions: fatal, MAIS 3+ and MAIS 2+.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleSeverityModel {
    pub fatal: LogisticModel,
    pub mais3: LogisticModel,
    pub mais2: LogisticModel,
}

#[derive(serde::Deserialize)]
struct ModelFile {
    #[serde(default)]
    schema: Option<String>,
    models: ModelSection,
}

#[derive(serde::Deserialize)]
struct ModelSection {
    fatal: ModelEntry,
    mais3: ModelEntry,
    mais2: ModelEntry,
}

#[derive(serde::Deserialize)]
struct ModelEntry {
    terms: Vec<(String, f64)>,
}

impl VehicleSeverityModel {
    pub fn from_toml_str(text: &str) -> Result<VehicleSeverityModel> {
        let file: ModelFile =
            toml::from_str(text).map_err(|e| Error::Model(format!("bad model document: {e}")))?;
        if let Some(schema) = &file.schema {
            if schema != "epsm-severity-v1" {
                return Err(Error::Model(format!("unsupported schema `{schema}`")));
            }
        }
        let build = |entry: &ModelEntry| -> Result<LogisticModel> {
            if entry.terms.is_empty() {
                return Err(Error::Model("model with no terms".into()));
            }
            let terms = entry
                .terms
                .iter()
                .map(|(name, coeff)| {
                    if !coeff.is_finite() {
                        return Err(Error::Model(format!("non-finite coefficient for `{name}`")));
                    }
                    Ok((Term::parse(name)?, *coeff))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LogisticModel { terms })
        };
        Ok(VehicleSeverityModel {
            fatal: build(&file.models.fatal)?,
            mais3: build(&file.models.mais3)?,
            mais2: build(&file.models.mais2)?,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<VehicleSeverityModel> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// The bundled default coefficients.
    pub fn bundled() -> VehicleSeverityModel {
        Self::from_toml_str(include_str!("../config/severity_models.toml"))
            .expect("bundled severity model must parse")
    }
}

/// Vehicle-vehicle severity from the closing speed (m/s) and impact
/// direction. Band precedence mirrors the VRU mapping: fatal onto
/// [0.8, 1.0], MAIS 3+ onto [0.2, 0.8), MAIS 2+ onto [0.0, 0.2]; all
/// probabilities below 0.5 score 0.
pub fn vehicle_severity(
    rel_speed_mps: f64,
    direction: ImpactDirection,
    model: &VehicleSeverityModel,
) -> f64 {
    let v_kmh = rel_speed_mps * MPS_TO_KMH;
    let p_fatal = model.fatal.probability(v_kmh, direction);
    if p_fatal >= 0.5 {
        return linear_map(p_fatal, 0.5, 1.0, 0.8, 1.0).expect("p_fatal in band");
    }
    let p_mais3 = model.mais3.probability(v_kmh, direction);
    if p_mais3 >= 0.5 {
        let i = linear_map(p_mais3, 0.5, 1.0, 0.2, 0.8).expect("p_mais3 in band");
        return i.min(band_cap(0.8));
    }
    let p_mais2 = model.mais2.probability(v_kmh, direction);
    if p_mais2 >= 0.5 {
        return linear_map(p_mais2, 0.5, 1.0, 0.0, 0.2).expect("p_mais2 in band");
    }
    0.0
}

/// Severity dispatch by object type: VRUs use the pedestrian model with
/// the ego speed (default age when unknown), vehicles use the velocity
/// difference and bearing-derived impact direction.
pub fn severity(
    ego: &ObjectState,
    obj: &ObjectState,
    model: &VehicleSeverityModel,
    params: &MetricParams,
) -> f64 {
    if obj.class.is_vru() {
        let age = obj.age_years.unwrap_or(params.vru_default_age_years);
        vru_severity(ego.speed(), age)
    } else {
        let rel_speed = (ego.velocity_mps - obj.velocity_mps).norm();
        vehicle_severity(rel_speed, impact_direction(ego, obj), model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec2;
    use crate::scenario::ObjectClass;

    const REL_TOL: f64 = 1e-12;

    fn rel_close(a: f64, b: f64) -> bool {
        (a - b).abs() <= REL_TOL * b.abs().max(1.0)
    }

    #[test]
    fn fatality_regression_values() {
        // frozen against a 40-digit evaluation of the regression
        assert!(rel_close(pedestrian_fatality_prob(0.0, 0.0), 3.052421113022259e-4));
        assert!(rel_close(pedestrian_fatality_prob(50.0, 30.0), 0.028773636405500313));
        assert!(pedestrian_fatality_prob(60.0, 30.0) > pedestrian_fatality_prob(50.0, 30.0));
    }

    #[test]
    fn ksi_regression_values() {
        assert!(rel_close(pedestrian_ksi_prob(0.0, 0.0), 0.04791161100876325));
        assert!(rel_close(pedestrian_ksi_prob(40.0, 50.0), 0.6273114351512885));
    }

    #[test]
    fn ksi_dominates_fatality_on_domain() {
        for vi in 0..=40 {
            for ai in 0..=12 {
                let v = vi as f64 * 5.0;
                let a = ai as f64 * 10.0;
                assert!(
                    pedestrian_ksi_prob(v, a) >= pedestrian_fatality_prob(v, a),
                    "KSI < fatal at V={v}, A={a}"
                );
            }
        }
    }

    #[test]
    fn linear_map_endpoints_and_midpoint() {
        assert_eq!(linear_map(0.5, 0.5, 1.0, 0.8, 1.0).unwrap(), 0.8);
        assert_eq!(linear_map(1.0, 0.5, 1.0, 0.8, 1.0).unwrap(), 1.0);
        assert!((linear_map(0.75, 0.5, 1.0, 0.8, 1.0).unwrap() - 0.9).abs() < 1e-15);
        assert!(linear_map(0.4, 0.5, 1.0, 0.8, 1.0).is_err());
    }

    #[test]
    fn vru_severity_bands() {
        // V = 0, A = 0: lowest band, I = 0.4 * P_KSI / 0.5
        let i = vru_severity(0.0, 0.0);
        assert!(rel_close(i, 0.0383292888070106));
        // severity non-decreasing in ego speed
        let mut prev = 0.0;
        for step in 0..=60 {
            let i = vru_severity(step as f64, 30.0);
            assert!(i >= prev - 1e-15, "severity decreased at {step} m/s");
            assert!((0.0..=1.0).contains(&i));
            prev = i;
        }
        // fatal band lower edge: find the speed where P_K crosses 0.5
        // (logistic(z) = 0.5 at z = 0 -> 0.0012 V^2 = 8.0941 - 0.0525 A)
        // and nudge just above it to stay clear of the discontinuity
        let a: f64 = 30.0;
        let v_kmh = ((8.0941 - 0.0525 * a) / 0.0012).sqrt() + 1e-6;
        let i = vru_severity(v_kmh / MPS_TO_KMH, a);
        assert!((i - 0.8).abs() < 1e-6, "band edge severity {i}");
    }

    #[test]
    fn vru_severity_continuous_within_bands() {
        // fine sweep: steps are tiny except where the governing
        // probability crosses 0.5 (the band switches)
        let age = 55.0;
        let mut prev_i = vru_severity(0.0, age);
        let mut prev_band = 0;
        for step in 1..4000 {
            let speed = step as f64 * 0.01;
            let v_kmh = speed * MPS_TO_KMH;
            let band = if pedestrian_fatality_prob(v_kmh, age) >= 0.5 {
                2
            } else if pedestrian_ksi_prob(v_kmh, age) >= 0.5 {
                1
            } else {
                0
            };
            let i = vru_severity(speed, age);
            if band == prev_band {
                assert!(
                    (i - prev_i).abs() < 0.01,
                    "jump of {} inside band {band} at {speed} m/s",
                    (i - prev_i).abs()
                );
            }
            prev_i = i;
            prev_band = band;
        }
    }

    #[test]
    fn vru_band_membership_matches_probability() {
        for step in 0..=80 {
            let speed = step as f64;
            let v_kmh = speed * MPS_TO_KMH;
            let i = vru_severity(speed, 40.0);
            let p_k = pedestrian_fatality_prob(v_kmh, 40.0);
            let p_ksi = pedestrian_ksi_prob(v_kmh, 40.0);
            if p_k >= 0.5 {
                assert!((0.8..=1.0).contains(&i));
            } else if p_ksi >= 0.5 {
                assert!((0.4..0.8).contains(&i));
            } else {
                assert!((0.0..0.4).contains(&i));
            }
        }
    }

    #[test]
    fn vehicle_severity_bands() {
        let model = VehicleSeverityModel::bundled();
        assert_eq!(vehicle_severity(0.0, ImpactDirection::Front, &model), 0.0);
        // monotone non-decreasing in closing speed per direction
        for direction in [ImpactDirection::Front, ImpactDirection::Side, ImpactDirection::Rear] {
            let mut prev = 0.0;
            for step in 0..=90 {
                let i = vehicle_severity(step as f64, direction, &model);
                assert!(i >= prev - 1e-15, "severity decreased at {step} m/s {direction:?}");
                assert!((0.0..=1.0).contains(&i));
                prev = i;
            }
        }
        // high-speed frontal crash lands in the fatal band
        assert!(vehicle_severity(50.0, ImpactDirection::Front, &model) >= 0.8);
    }

    #[test]
    fn vehicle_band_boundary_maps_to_band_floor() {
        // constant-0.5 fatal model: logistic(0) = 0.5 exactly, so every
        // input sits on the fatal band's lower edge
        let boundary = r#"
[models.fatal]
terms = [["intercept", 0.0]]
[models.mais3]
terms = [["intercept", 0.0]]
[models.mais2]
terms = [["intercept", 0.0]]
"#;
        let model = VehicleSeverityModel::from_toml_str(boundary).unwrap();
        for speed in [0.0, 10.0, 33.0] {
            assert_eq!(vehicle_severity(speed, ImpactDirection::Front, &model), 0.8);
        }
    }

    #[test]
    fn malformed_model_rejected() {
        assert!(VehicleSeverityModel::from_toml_str("models = 3").is_err());
        let bad_term = r#"
[models.fatal]
terms = [["warp", 1.0]]
[models.mais3]
terms = [["intercept", -4.5]]
[models.mais2]
terms = [["intercept", -3.0]]
"#;
        assert!(matches!(
            VehicleSeverityModel::from_toml_str(bad_term),
            Err(Error::Model(_))
        ));
    }

    fn state(x: f64, y: f64, vx: f64, vy: f64, class: ObjectClass) -> ObjectState {
        ObjectState {
            id: "o".into(),
            class,
            position_m: Vec2::new(x, y),
            heading_rad: 0.0,
            velocity_mps: Vec2::new(vx, vy),
            length_m: 4.5,
            width_m: 1.8,
            age_years: None,
        }
    }

    #[test]
    fn dispatch_by_class() {
        let model = VehicleSeverityModel::bundled();
        let params = MetricParams::default();
        let ego = state(0.0, 0.0, 0.0, 0.0, ObjectClass::Car);

        let mut ped = state(10.0, 0.0, 0.0, 0.0, ObjectClass::Pedestrian);
        ped.age_years = Some(20.0);
        let i = severity(&ego, &ped, &model, &params);
        assert!(rel_close(i, vru_severity(0.0, 20.0)));

        // cyclists take the VRU path too
        let cyclist = state(10.0, 0.0, 0.0, 0.0, ObjectClass::Cyclist);
        let i = severity(&ego, &cyclist, &model, &params);
        assert!(rel_close(i, vru_severity(0.0, params.vru_default_age_years)));

        // head-on bearing is frontal
        let ahead = state(20.0, 0.0, -10.0, 0.0, ObjectClass::Car);
        assert_eq!(impact_direction(&ego, &ahead), ImpactDirection::Front);
        let beside = state(0.0, 10.0, 0.0, 0.0, ObjectClass::Car);
        assert_eq!(impact_direction(&ego, &beside), ImpactDirection::Side);
        let behind = state(-20.0, 0.0, 0.0, 0.0, ObjectClass::Car);
        assert_eq!(impact_direction(&ego, &behind), ImpactDirection::Rear);
    }
}

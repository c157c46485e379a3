//! Frame-by-frame evaluation pipeline, report rows and aggregation.
//!
//! Scenarios are evaluated independently (and in parallel, when asked);
//! every per-frame row is rounded to the 6-decimal CSV representation
//! before any aggregation, so the aggregate table is recomputable from
//! the CSV alone and identical across runs and thread counts.

use crate::combiner::{final_safety, InLaneMiss, MissLocation, SafetyLabel, TreeCase, TreeInputs};
use crate::error::{Error, Result};
use crate::geometry::{arc_length, point_at_arc, project_onto_polyline, Vec2};
use crate::lane_safety::{
    lane_safety_score, lateral_rating, longitudinal_rating, mean_lateral_deviation,
    semantic_rating, LaneSafetyBreakdown,
};
use crate::object_safety::{match_detections, missed_objects_in_lane, object_safety_score};
use crate::perf::{lane_point_confusion, modp, precision_recall_f1_accuracy, ConfusionCounts};
use crate::scenario::{DetectionSet, Frame, LaneRecord, LaneRelation, Scenario};
use crate::sensor::{resample_lane, simulate_frame, LANE_SAMPLE_SPACING_M};
use crate::severity::VehicleSeverityModel;
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

/// One evaluated frame. Float fields hold full precision; the CSV layer
/// rounds to 6 decimals and aggregation uses the rounded values.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub scenario_id: String,
    pub frame: usize,
    pub t_s: f64,
    pub p: f64,
    pub r: f64,
    pub f1: f64,
    /// Lane-point accuracy (object detection has no negative universe).
    pub a: f64,
    /// Cumulative MODA within the scenario up to this frame.
    pub moda: f64,
    pub modp: f64,
    pub lane_p: f64,
    pub lane_r: f64,
    pub lane_f1: f64,
    pub s_obj: f64,
    pub s_lane: f64,
    pub s_p: f64,
    pub tree_case: TreeCase,
    pub s_f: f64,
    pub label: SafetyLabel,
}

pub const CSV_HEADER: &str = "scenario_id,frame,t_s,p,r,f1,a,moda,modp,lane_p,lane_r,lane_f1,s_obj,s_lane,s_p,tree_case,s_f,label";

/// Names of the numeric columns, in CSV order.
pub const NUMERIC_COLUMNS: [&str; 14] = [
    "p", "r", "f1", "a", "moda", "modp", "lane_p", "lane_r", "lane_f1", "s_obj", "s_lane", "s_p",
    "s_f", "t_s",
];

/// Formats a float exactly as the CSV does.
pub fn format_value(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v };
    format!("{v:.6}")
}

/// The value a float takes after the 6-decimal CSV round trip.
pub fn csv_rounded(v: f64) -> f64 {
    format_value(v).parse().expect("fixed-point formatting is parseable")
}

impl FrameRow {
    pub fn to_csv_record(&self) -> Vec<String> {
        vec![
            self.scenario_id.clone(),
            self.frame.to_string(),
            format_value(self.t_s),
            format_value(self.p),
            format_value(self.r),
            format_value(self.f1),
            format_value(self.a),
            format_value(self.moda),
            format_value(self.modp),
            format_value(self.lane_p),
            format_value(self.lane_r),
            format_value(self.lane_f1),
            format_value(self.s_obj),
            format_value(self.s_lane),
            format_value(self.s_p),
            self.tree_case.to_string(),
            format_value(self.s_f),
            self.label.to_string(),
        ]
    }

    /// Numeric column value after CSV rounding, by column name.
    pub fn rounded(&self, column: &str) -> f64 {
        let raw = match column {
            "t_s" => self.t_s,
            "p" => self.p,
            "r" => self.r,
            "f1" => self.f1,
            "a" => self.a,
            "moda" => self.moda,
            "modp" => self.modp,
            "lane_p" => self.lane_p,
            "lane_r" => self.lane_r,
            "lane_f1" => self.lane_f1,
            "s_obj" => self.s_obj,
            "s_lane" => self.s_lane,
            "s_p" => self.s_p,
            "s_f" => self.s_f,
            other => panic!("unknown column {other}"),
        };
        csv_rounded(raw)
    }
}

/// Ego-lane reference points ahead of the ego, clipped to the expected
/// perception range and sampled at the lane spacing.
fn lane_reference_points(scenario: &Scenario, frame: &Frame) -> Vec<Vec2> {
    let centerline = &scenario.map.ego_lane.centerline_m;
    if centerline.len() < 2 {
        return Vec::new();
    }
    let start = project_onto_polyline(frame.ego.position_m, centerline);
    let total = arc_length(centerline);
    let end = (start + scenario.params.detection_distance_m).min(total);
    let mut points = Vec::new();
    let mut s = start;
    while s <= end + 1e-9 {
        points.push(point_at_arc(centerline, s.min(total)));
        s += LANE_SAMPLE_SPACING_M;
    }
    points
}

/// Lane evaluation of one frame. A frame without a detected lane scores
/// zero detected range and an untriggered-intrusion semantic rating, so
/// its lane safety collapses to zero for a moving ego.
fn evaluate_lane(
    scenario: &Scenario,
    frame: &Frame,
    detections: &DetectionSet,
) -> Result<(LaneSafetyBreakdown, ConfusionCounts)> {
    let params = &scenario.params;
    let map = &scenario.map;
    let gt_reference = lane_reference_points(scenario, frame);
    match detections.lane_pts_m.as_deref() {
        Some(lane) if lane.len() >= 2 => {
            let det_points = resample_lane(lane);
            let counts =
                lane_point_confusion(&gt_reference, &det_points, params.lane_match_threshold_m);
            let d_mean = mean_lateral_deviation(&map.ego_lane.centerline_m, lane)?;
            let (s_lat, lateral_safe) =
                lateral_rating(d_mean, map.ego_lane.width_m, frame.ego.width_m)?;
            let s_long = longitudinal_rating(
                arc_length(lane),
                frame.ego.speed(),
                params.brake_decel_mps2,
            );
            let s_sem = if lateral_safe {
                None
            } else {
                Some(semantic_rating(&frame.ego, map, lane))
            };
            Ok((lane_safety_score(s_long, s_lat, lateral_safe, s_sem, d_mean), counts))
        }
        _ => {
            let counts = lane_point_confusion(&gt_reference, &[], params.lane_match_threshold_m);
            let s_long =
                longitudinal_rating(0.0, frame.ego.speed(), params.brake_decel_mps2);
            let breakdown =
                lane_safety_score(s_long, 0.8, false, Some(0.8), f64::INFINITY);
            Ok((breakdown, counts))
        }
    }
}

/// Evaluates one scenario into per-frame rows. When the scenario has a
/// sensor section, frames without stored detections are simulated with
/// it (`seed_override` replaces the configured seed).
pub fn evaluate_scenario(
    scenario: &Scenario,
    model: &VehicleSeverityModel,
    seed_override: Option<u64>,
) -> Result<Vec<FrameRow>> {
    let params = &scenario.params;
    let mut rows = Vec::with_capacity(scenario.frames.len());
    let mut misses_cum: u64 = 0;
    let mut fps_cum: u64 = 0;
    let mut gts_cum: u64 = 0;

    for (index, frame) in scenario.frames.iter().enumerate() {
        let simulated;
        let detections = match &scenario.sensor {
            Some(cfg) if frame.detections.is_empty() => {
                let seed = seed_override.unwrap_or(cfg.seed);
                simulated =
                    simulate_frame(&scenario.id, index as u64, frame, &scenario.map, cfg, seed)?;
                &simulated
            }
            _ => &frame.detections,
        };

        let matches = match_detections(&frame.objects, &detections.boxes, params);
        let counts = ConfusionCounts {
            tp: matches.pairs.len() as u64,
            fp: matches.fp_indices.len() as u64,
            fn_: matches.fn_ids.len() as u64,
            tn: 0,
        };
        let obj_scores = precision_recall_f1_accuracy(&counts);

        misses_cum += counts.fn_;
        fps_cum += counts.fp;
        gts_cum += frame.objects.len() as u64;
        let moda = if gts_cum == 0 {
            if misses_cum + fps_cum == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            1.0 - (misses_cum + fps_cum) as f64 / gts_cum as f64
        };

        let pair_ious: Vec<f64> = matches.pairs.iter().map(|p| p.iou).collect();
        let (modp_value, _) = modp(&pair_ious);

        let (lane_breakdown, lane_counts) = evaluate_lane(scenario, frame, detections)?;
        let lane_scores = precision_recall_f1_accuracy(&lane_counts);

        let (s_obj, _weighted) = object_safety_score(frame, &matches, params, model);

        // decision-tree inputs
        let missed_adjacent = frame
            .objects
            .iter()
            .filter(|obj| matches.is_missed(&obj.id))
            .any(|obj| scenario.map.adjacent.iter().any(|adj| adj.lane.contains(obj.position_m)));
        // fall back to the mapped ego lane when no lane was detected, so
        // a missed object straight ahead cannot earn the B2 bonus
        let corridor = match detections.lane_pts_m.as_deref() {
            Some(lane) if lane.len() >= 2 => LaneRecord {
                centerline_m: lane.to_vec(),
                width_m: scenario.map.ego_lane.width_m,
            },
            _ => scenario.map.ego_lane.clone(),
        };
        let in_lane_misses: Vec<InLaneMiss> = missed_objects_in_lane(frame, &matches, &corridor)
            .into_iter()
            .map(|obj| {
                let on_sidewalk = scenario
                    .map
                    .adjacent
                    .iter()
                    .filter(|adj| adj.relation == LaneRelation::Sidewalk)
                    .any(|adj| adj.lane.contains(obj.position_m));
                InLaneMiss {
                    location: if on_sidewalk { MissLocation::Sidewalk } else { MissLocation::Road },
                    ttc: crate::criticality::encounter(&frame.ego, obj).ttc,
                }
            })
            .collect();
        let tree = TreeInputs {
            lateral_safe: lane_breakdown.lateral_safe,
            missed_adjacent,
            in_lane_misses,
        };
        let safety = final_safety(s_obj, lane_breakdown.s_lane, &tree, params);

        rows.push(FrameRow {
            scenario_id: scenario.id.clone(),
            frame: index,
            t_s: frame.t_s,
            p: obj_scores.precision,
            r: obj_scores.recall,
            f1: obj_scores.f1,
            a: lane_scores.accuracy,
            moda,
            modp: modp_value,
            lane_p: lane_scores.precision,
            lane_r: lane_scores.recall,
            lane_f1: lane_scores.f1,
            s_obj,
            s_lane: lane_breakdown.s_lane,
            s_p: safety.s_p,
            tree_case: safety.tree_case,
            s_f: safety.s_f,
            label: safety.label,
        });
    }
    Ok(rows)
}

/// Per-scenario roll-up (scores are worst-case over frames).
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioStats {
    pub scenario_id: String,
    pub frames: usize,
    pub s_f_min: f64,
    pub s_f_mean: f64,
    pub s_obj_min: f64,
    pub moda_final: f64,
    pub label: SafetyLabel,
}

/// mu/sigma/min/max of one metric column (population sigma).
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub metric: &'static str,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMeta {
    pub seed: Option<u64>,
    pub params_hash: String,
    pub tool_version: String,
}

/// Full evaluation output: rows, both aggregation granularities and the
/// reproducibility metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub per_frame: Vec<FrameRow>,
    pub per_scenario: Vec<ScenarioStats>,
    pub aggregate: Vec<Aggregate>,
    pub run_meta: RunMeta,
}

fn aggregate_column(rows: &[FrameRow], column: &'static str) -> Aggregate {
    let values: Vec<f64> = rows.iter().map(|r| r.rounded(column)).collect();
    aggregate_values(column, &values)
}

pub fn aggregate_values(metric: &'static str, values: &[f64]) -> Aggregate {
    if values.is_empty() {
        return Aggregate { metric, mean: 0.0, std: 0.0, min: 0.0, max: 0.0 };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Aggregate {
        metric,
        mean,
        std: var.sqrt(),
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Metric columns aggregated into the summary table, grouped the way
/// the summary prints them.
pub const OBJECT_GROUP: [&str; 5] = ["p", "r", "f1", "moda", "modp"];
pub const LANE_GROUP: [&str; 4] = ["lane_p", "lane_r", "lane_f1", "a"];
pub const EPSM_GROUP: [&str; 4] = ["s_obj", "s_lane", "s_p", "s_f"];

fn scenario_stats(rows: &[FrameRow]) -> Vec<ScenarioStats> {
    let mut out: Vec<ScenarioStats> = Vec::new();
    let mut ids: Vec<&str> = rows.iter().map(|r| r.scenario_id.as_str()).collect();
    ids.dedup();
    for id in ids {
        let scenario_rows: Vec<&FrameRow> =
            rows.iter().filter(|r| r.scenario_id == id).collect();
        let s_f: Vec<f64> = scenario_rows.iter().map(|r| r.rounded("s_f")).collect();
        let s_obj: Vec<f64> = scenario_rows.iter().map(|r| r.rounded("s_obj")).collect();
        let min_s_f = s_f.iter().copied().fold(f64::INFINITY, f64::min);
        out.push(ScenarioStats {
            scenario_id: id.to_string(),
            frames: scenario_rows.len(),
            s_f_min: min_s_f,
            s_f_mean: s_f.iter().sum::<f64>() / s_f.len() as f64,
            s_obj_min: s_obj.iter().copied().fold(f64::INFINITY, f64::min),
            moda_final: scenario_rows.last().map(|r| r.rounded("moda")).unwrap_or(0.0),
            label: crate::combiner::classify_label(min_s_f),
        });
    }
    out
}

/// Hash of every scenario's parameter block, in scenario order, tying a
/// report to the exact metric configuration.
pub fn params_hash(scenarios: &[Scenario]) -> String {
    let mut hasher = Sha256::new();
    for s in scenarios {
        hasher.update(s.id.as_bytes());
        hasher.update(
            serde_json::to_vec(&s.params).expect("params serialization cannot fail"),
        );
    }
    format!("{:x}", hasher.finalize())
}

/// Evaluates a corpus of scenarios, in parallel when `jobs != Some(1)`.
/// Row order and every byte of the output are independent of the
/// thread count. Scenario failures are returned alongside the rows of
/// the scenarios that succeeded.
pub fn evaluate_corpus(
    scenarios: &[Scenario],
    model: &VehicleSeverityModel,
    seed_override: Option<u64>,
    jobs: Option<usize>,
) -> (MetricReport, Vec<(String, Error)>) {
    let run = || -> Vec<Result<Vec<FrameRow>>> {
        scenarios
            .par_iter()
            .map(|s| evaluate_scenario(s, model, seed_override))
            .collect()
    };
    let results = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .expect("thread pool")
            .install(run),
        None => run(),
    };

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (scenario, result) in scenarios.iter().zip(results) {
        match result {
            Ok(mut r) => rows.append(&mut r),
            Err(e) => failures.push((scenario.id.clone(), e)),
        }
    }

    let aggregate = NUMERIC_COLUMNS
        .iter()
        .filter(|c| **c != "t_s")
        .map(|c| aggregate_column(&rows, c))
        .collect();
    let report = MetricReport {
        per_scenario: scenario_stats(&rows),
        aggregate,
        run_meta: RunMeta {
            seed: seed_override,
            params_hash: params_hash(scenarios),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        },
        per_frame: rows,
    };
    (report, failures)
}

/// Per-frame rows as a CSV document.
pub fn rows_to_csv(rows: &[FrameRow]) -> String {
    let mut writer = csv::WriterBuilder::new().from_writer(Vec::new());
    writer
        .write_record(CSV_HEADER.split(','))
        .expect("header write");
    for row in rows {
        writer.write_record(row.to_csv_record()).expect("row write");
    }
    String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv utf8")
}

/// Parsed CSV row, as read back by the report command.
#[derive(Debug, Clone)]
pub struct ParsedRow {
    pub scenario_id: String,
    pub frame: usize,
    pub values: Vec<(&'static str, f64)>,
    pub tree_case: String,
    pub label: String,
}

/// Reads per-frame CSVs, enforcing an identical column schema.
pub fn parse_rows_csv(text: &str, origin: &str) -> Result<Vec<ParsedRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::SchemaMismatch(format!("{origin}: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    if header != expected {
        return Err(Error::SchemaMismatch(format!(
            "{origin}: header {:?} does not match {:?}",
            header, expected
        )));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::SchemaMismatch(format!("{origin}: {e}")))?;
        let get = |idx: usize| -> &str { record.get(idx).unwrap_or("") };
        let parse_f = |idx: usize, name: &str| -> Result<f64> {
            get(idx).parse().map_err(|_| {
                Error::SchemaMismatch(format!(
                    "{origin}: row {i}: column {name} value `{}` is not numeric",
                    get(idx)
                ))
            })
        };
        let mut values = Vec::new();
        let columns: Vec<&str> = CSV_HEADER.split(',').collect();
        for (idx, name) in columns.iter().enumerate() {
            match *name {
                "scenario_id" | "tree_case" | "label" | "frame" => {}
                _ => {
                    let column: &'static str = NUMERIC_COLUMNS
                        .iter()
                        .find(|c| *c == name)
                        .expect("column registered");
                    values.push((column, parse_f(idx, name)?));
                }
            }
        }
        rows.push(ParsedRow {
            scenario_id: get(0).to_string(),
            frame: get(1).parse().map_err(|_| {
                Error::SchemaMismatch(format!("{origin}: row {i}: bad frame index"))
            })?,
            values,
            tree_case: get(15).to_string(),
            label: get(17).to_string(),
        });
    }
    Ok(rows)
}

fn group_lines(out: &mut String, title: &str, metrics: &[&str], aggregates: &[Aggregate]) {
    out.push_str(&format!("-- {title} --\n"));
    for metric in metrics {
        if let Some(agg) = aggregates.iter().find(|a| a.metric == *metric) {
            out.push_str(&format!(
                "{:<10} {:>10} {:>10} {:>10} {:>10}\n",
                agg.metric,
                format_value(agg.mean),
                format_value(agg.std),
                format_value(agg.min),
                format_value(agg.max),
            ));
        }
    }
}

/// Renders the aggregate summary (frame-level table grouped by task,
/// plus the per-scenario worst-case table). Sigma is the population
/// standard deviation.
pub fn render_summary(report: &MetricReport) -> String {
    let mut out = String::new();
    out.push_str("epsm evaluation summary\n");
    out.push_str(&format!("tool_version: {}\n", report.run_meta.tool_version));
    match report.run_meta.seed {
        Some(seed) => out.push_str(&format!("seed: {seed}\n")),
        None => out.push_str("seed: scenario-configured\n"),
    }
    out.push_str(&format!("params_sha256: {}\n", report.run_meta.params_hash));
    out.push_str(&format!(
        "scenarios: {}  frames: {}\n",
        report.per_scenario.len(),
        report.per_frame.len()
    ));
    out.push_str("sigma: population\n\n");
    out.push_str(&format!(
        "{:<10} {:>10} {:>10} {:>10} {:>10}\n",
        "metric", "mean", "std", "min", "max"
    ));
    group_lines(&mut out, "object detection", &OBJECT_GROUP, &report.aggregate);
    group_lines(&mut out, "lane detection", &LANE_GROUP, &report.aggregate);
    group_lines(&mut out, "epsm", &EPSM_GROUP, &report.aggregate);
    out.push_str("\nper-scenario (worst-case):\n");
    out.push_str(&format!(
        "{:<20} {:>7} {:>10} {:>10} {:>10} {:>12} {}\n",
        "scenario", "frames", "s_f_min", "s_f_mean", "s_obj_min", "moda_final", "label"
    ));
    for s in &report.per_scenario {
        out.push_str(&format!(
            "{:<20} {:>7} {:>10} {:>10} {:>10} {:>12} {}\n",
            s.scenario_id,
            s.frames,
            format_value(s.s_f_min),
            format_value(s.s_f_mean),
            format_value(s.s_obj_min),
            format_value(s.moda_final),
            s.label,
        ));
    }
    out
}

/// Writes the CSV and summary files of a report into a directory.
pub fn write_report(report: &MetricReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|source| Error::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let write = |name: &str, content: &str| -> Result<()> {
        let path = out_dir.join(name);
        let mut file = std::fs::File::create(&path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        file.write_all(content.as_bytes()).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })
    };
    write("per_frame.csv", &rows_to_csv(&report.per_frame))?;
    write("summary.txt", &render_summary(report))?;
    let mut scenario_csv = String::from("scenario_id,frames,s_f_min,s_f_mean,s_obj_min,moda_final,label\n");
    for s in &report.per_scenario {
        scenario_csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.scenario_id,
            s.frames,
            format_value(s.s_f_min),
            format_value(s.s_f_mean),
            format_value(s.s_obj_min),
            format_value(s.moda_final),
            s.label,
        ));
    }
    write("scenarios.csv", &scenario_csv)
}

//! `epsm`: evaluate scenarios, simulate detections and aggregate reports.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (unreadable or
//! invalid inputs), 3 internal error.

use clap::{Parser, Subcommand};
use epsm_core::pipeline::{
    self, aggregate_values, evaluate_corpus, format_value, parse_rows_csv, render_summary,
    write_report, Aggregate, ParsedRow,
};
use epsm_core::scenario::{load_scenario, save_scenario, MetricParams, Scenario};
use epsm_core::sensor::{simulate_scenario, SensorConfig};
use epsm_core::severity::VehicleSeverityModel;
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "epsm", version, about = "Joint safety evaluation of object and lane detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate scenario documents into per-frame and aggregate reports.
    ///
    /// Frames without stored detections are simulated on the fly when
    /// the scenario carries a sensor section.
    Evaluate {
        /// Scenario documents (JSON), at least one
        #[arg(required = true)]
        files: Vec<PathBuf>,
        /// JSON file with metric-parameter overrides (partial allowed)
        #[arg(long)]
        params: Option<PathBuf>,
        /// Override the sensor seed of every scenario
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory for per_frame.csv, scenarios.csv, summary.txt
        #[arg(long, default_value = "epsm-out")]
        out: PathBuf,
        /// Worker threads for scenario evaluation (default: all cores)
        #[arg(long)]
        jobs: Option<usize>,
        /// Record per-scenario errors and keep evaluating the rest
        #[arg(long)]
        keep_going: bool,
        /// TOML file with vehicle severity-model coefficients
        #[arg(long)]
        severity_model: Option<PathBuf>,
    },
    /// Fill the detection sets of a scenario from the sensor models.
    Simulate {
        /// Scenario document with ground truth
        file: PathBuf,
        /// JSON sensor configuration (defaults to the scenario's own)
        #[arg(long)]
        sensor: Option<PathBuf>,
        /// Override the sensor seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output scenario path
        #[arg(long)]
        out: PathBuf,
        /// Replace detections that are already present
        #[arg(long)]
        overwrite: bool,
    },
    /// Aggregate per-frame CSVs into a mu/sigma/min/max table.
    Report {
        /// Per-frame CSV files sharing the evaluate column schema
        #[arg(required = true)]
        csvs: Vec<PathBuf>,
        /// Directory for per-metric time-series files
        #[arg(long)]
        plots: Option<PathBuf>,
    },
}

enum CliError {
    Data(String),
    Internal(String),
}

impl From<epsm_core::Error> for CliError {
    fn from(e: epsm_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version through the error path too
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Data(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(message)) => {
            eprintln!("internal error: {message}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Evaluate { files, params, seed, out, jobs, keep_going, severity_model } => {
            cmd_evaluate(&files, params.as_deref(), seed, &out, jobs, keep_going, severity_model.as_deref())
        }
        Command::Simulate { file, sensor, seed, out, overwrite } => {
            cmd_simulate(&file, sensor.as_deref(), seed, &out, overwrite)
        }
        Command::Report { csvs, plots } => cmd_report(&csvs, plots.as_deref()),
    }
}

/// Partial metric-parameter override; absent fields keep the scenario's
/// own values.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsOverride {
    power_mean_p: Option<f64>,
    iou_threshold_vehicle: Option<f64>,
    iou_threshold_vru: Option<f64>,
    detection_distance_m: Option<f64>,
    bonus_factor: Option<f64>,
    k_sigmoid: Option<f64>,
    t_falloff_s: Option<f64>,
    d_falloff_m: Option<f64>,
    brake_decel_mps2: Option<f64>,
    lane_match_threshold_m: Option<f64>,
    vru_default_age_years: Option<f64>,
}

impl ParamsOverride {
    fn apply(&self, params: &mut MetricParams) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { params.$field = v; })*
            };
        }
        set!(
            power_mean_p,
            iou_threshold_vehicle,
            iou_threshold_vru,
            detection_distance_m,
            bonus_factor,
            k_sigmoid,
            t_falloff_s,
            d_falloff_m,
            brake_decel_mps2,
            lane_match_threshold_m,
            vru_default_age_years
        );
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("bad {what} {}: {e}", path.display())))
}

fn cmd_evaluate(
    files: &[PathBuf],
    params_path: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    jobs: Option<usize>,
    keep_going: bool,
    severity_model: Option<&Path>,
) -> Result<(), CliError> {
    let overrides: Option<ParamsOverride> = match params_path {
        Some(path) => Some(read_json(path, "params file")?),
        None => None,
    };
    let model = match severity_model {
        Some(path) => VehicleSeverityModel::load(path)?,
        None => VehicleSeverityModel::bundled(),
    };

    let mut scenarios: Vec<Scenario> = Vec::new();
    let mut failures: Vec<(String, String)> = Vec::new();
    for file in files {
        match load_scenario(file) {
            Ok(mut scenario) => {
                if let Some(o) = &overrides {
                    o.apply(&mut scenario.params);
                }
                scenarios.push(scenario);
            }
            Err(e) if keep_going => failures.push((file.display().to_string(), e.to_string())),
            Err(e) => {
                let message = e.to_string();
                let path = file.display().to_string();
                return Err(CliError::Data(if message.contains(&path) {
                    message
                } else {
                    format!("{path}: {message}")
                }));
            }
        }
    }

    let (report, eval_failures) = evaluate_corpus(&scenarios, &model, seed, jobs);
    for (id, error) in eval_failures {
        let message = error.to_string();
        if keep_going {
            failures.push((id, message));
        } else {
            return Err(CliError::Data(message));
        }
    }
    if report.per_scenario.is_empty() {
        for (origin, message) in &failures {
            eprintln!("error: {origin}: {message}");
        }
        return Err(CliError::Data("no scenario evaluated successfully".into()));
    }

    write_report(&report, out)
        .map_err(|e| CliError::Internal(format!("writing report: {e}")))?;
    if !failures.is_empty() {
        let mut text = String::new();
        for (origin, message) in &failures {
            eprintln!("error: {origin}: {message}");
            text.push_str(&format!("{origin}: {message}\n"));
        }
        std::fs::write(out.join("errors.txt"), text)
            .map_err(|e| CliError::Internal(format!("writing errors.txt: {e}")))?;
    }
    print!("{}", render_summary(&report));
    println!("\nreport written to {}", out.display());
    Ok(())
}

fn cmd_simulate(
    file: &Path,
    sensor_path: Option<&Path>,
    seed: Option<u64>,
    out: &Path,
    overwrite: bool,
) -> Result<(), CliError> {
    let mut scenario = load_scenario(file)?;
    let cfg: SensorConfig = match sensor_path {
        Some(path) => read_json(path, "sensor config")?,
        None => scenario
            .sensor
            .clone()
            .ok_or_else(|| CliError::Data(format!(
                "{} has no sensor section; pass --sensor",
                file.display()
            )))?,
    };
    let issues = cfg.validate();
    if !issues.is_empty() {
        let lines: Vec<String> = issues.iter().map(|(rule, m)| format!("[{rule}] {m}")).collect();
        return Err(CliError::Data(format!("invalid sensor config: {}", lines.join("; "))));
    }
    if !overwrite && scenario.frames.iter().any(|f| !f.detections.is_empty()) {
        return Err(CliError::Data(
            "scenario already carries detections; pass --overwrite to replace them".into(),
        ));
    }
    for frame in &mut scenario.frames {
        frame.detections = Default::default();
    }
    simulate_scenario(&mut scenario, &cfg, seed)?;
    let mut stored = cfg;
    if let Some(seed) = seed {
        stored.seed = seed;
    }
    scenario.sensor = Some(stored);
    save_scenario(&scenario, out)?;
    println!("simulated detections written to {}", out.display());
    Ok(())
}

fn cmd_report(csvs: &[PathBuf], plots: Option<&Path>) -> Result<(), CliError> {
    let mut rows: Vec<ParsedRow> = Vec::new();
    for path in csvs {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        rows.extend(parse_rows_csv(&text, &path.display().to_string())?);
    }
    if rows.is_empty() {
        return Err(CliError::Data("no data rows in the given CSVs".into()));
    }

    let column = |name: &str| -> Vec<f64> {
        rows.iter()
            .flat_map(|r| r.values.iter().filter(|(c, _)| *c == name).map(|(_, v)| *v))
            .collect()
    };
    let mut aggregates: Vec<Aggregate> = Vec::new();
    for metric in pipeline::NUMERIC_COLUMNS {
        if metric == "t_s" {
            continue;
        }
        aggregates.push(aggregate_values(metric, &column(metric)));
    }

    println!("{:<10} {:>10} {:>10} {:>10} {:>10}", "metric", "mean", "std", "min", "max");
    for (title, group) in [
        ("object detection", &pipeline::OBJECT_GROUP[..]),
        ("lane detection", &pipeline::LANE_GROUP[..]),
        ("epsm", &pipeline::EPSM_GROUP[..]),
    ] {
        println!("-- {title} --");
        for metric in group {
            if let Some(a) = aggregates.iter().find(|a| a.metric == *metric) {
                println!(
                    "{:<10} {:>10} {:>10} {:>10} {:>10}",
                    a.metric,
                    format_value(a.mean),
                    format_value(a.std),
                    format_value(a.min),
                    format_value(a.max),
                );
            }
        }
    }
    println!("rows: {}", rows.len());

    if let Some(dir) = plots {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Internal(format!("creating {}: {e}", dir.display())))?;
        for metric in pipeline::NUMERIC_COLUMNS {
            if metric == "t_s" {
                continue;
            }
            let mut text = String::from("scenario_id,frame,value\n");
            for row in &rows {
                if let Some((_, v)) = row.values.iter().find(|(c, _)| *c == metric) {
                    text.push_str(&format!("{},{},{}\n", row.scenario_id, row.frame, format_value(*v)));
                }
            }
            let path = dir.join(format!("{metric}.csv"));
            std::fs::write(&path, text)
                .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display())))?;
        }
        println!("plot data written to {}", dir.display());
    }
    Ok(())
}

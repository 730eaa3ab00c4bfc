//! Command-line surface for the hotspot pipeline: build maps from drive
//! logs, merge them, replay held-out drives, score the results, synthesize
//! test scenarios, and export GeoJSON for inspection.

use clap::{Parser, Subcommand};
use pedmap::advisory::{
    load_output_file, replay, save_output_file, AdvisoryOutput, AdvisoryParams,
};
use pedmap::drive_log::{load_drive_log, save_drive_log};
use pedmap::evaluation::{
    evaluate_aggregate, evaluate_run, load_ground_truth_file, report_csv, report_to_json,
    save_ground_truth_file, EvalReport, GroundTruth,
};
use pedmap::geojson::map_to_geojson;
use pedmap::hotspot_map::{
    build_map, load_map_file, merge_maps, save_map_file, DEFAULT_CLUSTER_RADIUS_M,
};
use pedmap::scenario::{generate, ScenarioKind, ScenarioSpec};
use std::error::Error;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "pedmap",
    version,
    about = "Pedestrian-hotspot mapping and look-ahead driver advisories",
    long_about = "Builds weighted pedestrian-hotspot maps from dashcam drive logs, replays \
                  drives against a map to raise advisories whenever a hotspot ahead falls \
                  within the vehicle's stopping distance, and scores the advisories against \
                  ground truth.\n\n\
                  Stopping distance (meters, v in km/h):\n\
                  \n    s = b * ((0.278 * t * v) + v^2) / (254 * (f + G))\n\n\
                  with reaction time t, speed v, friction f, grade G, and safety offset b. \
                  Advisories fire when the nearest hotspot is closer than s and within the \
                  forward field of view (heading angle θ below the configured half-angle). \
                  Drives are sampled for evaluation every K meters of path."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a hotspot map from drive logs (.jsonl or .csv)
    BuildMap {
        /// Log files or directories to scan for *.jsonl / *.csv logs
        #[arg(long, num_args = 1.., required = true)]
        logs: Vec<PathBuf>,
        /// Output map JSON path
        #[arg(long)]
        out: PathBuf,
        /// Clustering radius in meters: samples within this distance of a
        /// node fold into it
        #[arg(long, default_value_t = DEFAULT_CLUSTER_RADIUS_M, value_name = "METERS")]
        cluster_radius: f64,
    },
    /// Merge two maps built with the same cluster radius
    MergeMaps {
        /// First map JSON
        a: PathBuf,
        /// Second map JSON
        b: PathBuf,
        /// Output map JSON path
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a drive log against a map and write the advisories
    #[command(
        long_about = "Replay a drive log against a map and write the advisories.\n\n\
        Every K meters of path, the vehicle's stopping distance is computed as\n\
        \n    s = b * ((0.278 * t * v) + v^2) / (254 * (f + G))\n\n\
        (s in meters, speed v in km/h) and an advisory is active when the nearest\n\
        hotspot node lies closer than s within the forward field of view θ."
    )]
    Replay {
        /// Hotspot map JSON
        #[arg(long)]
        map: PathBuf,
        /// Drive log to replay (.jsonl or .csv)
        #[arg(long)]
        log: PathBuf,
        /// Output advisories JSON path
        #[arg(long)]
        out: PathBuf,
        /// K: path distance in meters between advisory evaluations
        #[arg(long, default_value_t = AdvisoryParams::default().sampling_distance_m, value_name = "K")]
        sampling_distance: f64,
        /// t: driver reaction time in seconds
        #[arg(long, default_value_t = AdvisoryParams::default().reaction_time_s, value_name = "t")]
        reaction_time: f64,
        /// f: road friction coefficient
        #[arg(long, default_value_t = AdvisoryParams::default().friction, value_name = "f")]
        friction: f64,
        /// G: road grade, positive uphill
        #[arg(long, default_value_t = AdvisoryParams::default().grade, value_name = "G")]
        grade: f64,
        /// b: multiplicative safety offset on stopping distance (>= 1)
        #[arg(long, default_value_t = AdvisoryParams::default().offset, value_name = "b")]
        offset: f64,
        /// θ: forward field-of-view half-angle in degrees; hotspots at a
        /// larger heading angle are treated as behind
        #[arg(long, default_value_t = AdvisoryParams::default().fov_half_angle_deg, value_name = "θ")]
        fov: f64,
        /// Ignore hotspot nodes below this weight
        #[arg(long, default_value_t = AdvisoryParams::default().min_weight, value_name = "WEIGHT")]
        min_weight: u64,
    },
    /// Score advisories against ground-truth windows
    Evaluate {
        /// Advisories JSON from `replay`; repeat together with
        /// --ground-truth to aggregate several clips
        #[arg(long, required = true)]
        advisories: Vec<PathBuf>,
        /// Ground-truth JSON; one per --advisories, in the same order
        #[arg(long, required = true)]
        ground_truth: Vec<PathBuf>,
        /// Output report JSON path
        #[arg(long)]
        out: PathBuf,
        /// Also write a per-clip summary CSV next to the report
        #[arg(long)]
        csv: bool,
    },
    /// Generate a synthetic scenario: training logs, a detection-free test
    /// log, and ground truth
    Synth {
        /// Scenario kind
        #[arg(long)]
        scenario: ScenarioKind,
        /// RNG seed; a fixed seed reproduces the drives byte for byte
        #[arg(long)]
        seed: u64,
        /// Directory for the generated files
        #[arg(long)]
        out_dir: PathBuf,
        /// Per-axis GPS noise standard deviation in meters
        #[arg(long, default_value_t = 0.0, value_name = "METERS")]
        noise: f64,
        /// Number of training drives
        #[arg(long, default_value_t = 3)]
        train_drives: usize,
    },
    /// Export a map, optionally with replayed advisories, as GeoJSON
    ExportGeojson {
        /// Hotspot map JSON
        #[arg(long)]
        map: PathBuf,
        /// Advisories JSON from `replay` to overlay as episode traces
        #[arg(long)]
        advisories: Option<PathBuf>,
        /// Output GeoJSON path
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), Box<dyn Error>> {
    match command {
        Command::BuildMap {
            logs,
            out,
            cluster_radius,
        } => {
            let paths = expand_log_paths(&logs)?;
            let mut parsed = Vec::with_capacity(paths.len());
            for p in &paths {
                parsed.push(load_drive_log(p)?);
            }
            let map = build_map(&parsed, cluster_radius);
            save_map_file(&map, &out)?;
            println!(
                "wrote {} ({} nodes from {} logs)",
                out.display(),
                map.nodes().len(),
                parsed.len()
            );
        }
        Command::MergeMaps { a, b, out } => {
            let merged = merge_maps(&load_map_file(&a)?, &load_map_file(&b)?)?;
            save_map_file(&merged, &out)?;
            println!("wrote {} ({} nodes)", out.display(), merged.nodes().len());
        }
        Command::Replay {
            map,
            log,
            out,
            sampling_distance,
            reaction_time,
            friction,
            grade,
            offset,
            fov,
            min_weight,
        } => {
            let params = AdvisoryParams {
                reaction_time_s: reaction_time,
                friction,
                grade,
                offset,
                sampling_distance_m: sampling_distance,
                fov_half_angle_deg: fov,
                min_weight,
            };
            let run = replay(&load_drive_log(&log)?, &load_map_file(&map)?, &params)?;
            let output = AdvisoryOutput::from_run(&run);
            save_output_file(&output, &out)?;
            println!(
                "wrote {} ({} samples, {} episodes)",
                out.display(),
                output.samples.len(),
                output.episodes.len()
            );
        }
        Command::Evaluate {
            advisories,
            ground_truth,
            out,
            csv,
        } => {
            if advisories.len() != ground_truth.len() {
                return Err(format!(
                    "got {} --advisories but {} --ground-truth; pass one of each per clip",
                    advisories.len(),
                    ground_truth.len()
                )
                .into());
            }
            let outputs: Vec<AdvisoryOutput> = advisories
                .iter()
                .map(|p| load_output_file(p))
                .collect::<Result<_, _>>()?;
            let truths: Vec<GroundTruth> = ground_truth
                .iter()
                .map(|p| load_ground_truth_file(p))
                .collect::<Result<_, _>>()?;
            let per_clip: Vec<EvalReport> = outputs
                .iter()
                .zip(&truths)
                .map(|(o, g)| evaluate_run(o, g))
                .collect::<Result<_, _>>()?;
            let report = if per_clip.len() == 1 {
                per_clip[0].clone()
            } else {
                let pairs: Vec<(&AdvisoryOutput, &GroundTruth)> =
                    outputs.iter().zip(truths.iter()).collect();
                evaluate_aggregate(&pairs)?
            };
            std::fs::write(&out, report_to_json(&report))?;
            println!(
                "wrote {} (precision {}, recall {})",
                out.display(),
                report.precision,
                report.recall
            );
            if csv {
                let rows: Vec<(&AdvisoryOutput, &GroundTruth, &EvalReport)> = outputs
                    .iter()
                    .zip(&truths)
                    .zip(&per_clip)
                    .map(|((o, g), r)| (o, g, r))
                    .collect();
                let csv_path = out.with_extension("csv");
                std::fs::write(&csv_path, report_csv(&rows)?)?;
                println!("wrote {}", csv_path.display());
            }
        }
        Command::Synth {
            scenario,
            seed,
            out_dir,
            noise,
            train_drives,
        } => {
            let spec = ScenarioSpec {
                noise_m: noise,
                train_drives,
                ..ScenarioSpec::with_defaults(scenario, seed)
            };
            let generated = generate(&spec)?;
            std::fs::create_dir_all(&out_dir)?;
            let mut written = Vec::new();
            for log in generated
                .train_logs
                .iter()
                .chain(std::iter::once(&generated.test_log))
            {
                let path = out_dir.join(format!("{}.jsonl", log.clip_id()));
                save_drive_log(log, &path)?;
                written.push(path);
            }
            let gt_path = out_dir.join(format!("{}-gt.json", scenario.slug()));
            save_ground_truth_file(&generated.ground_truth, &gt_path)?;
            written.push(gt_path);
            for p in &written {
                println!("wrote {}", p.display());
            }
        }
        Command::ExportGeojson {
            map,
            advisories,
            out,
        } => {
            let map = load_map_file(&map)?;
            let output = match &advisories {
                Some(p) => Some(load_output_file(p)?),
                None => None,
            };
            std::fs::write(&out, map_to_geojson(&map, output.as_ref()))?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

/// Expand a mix of files and directories into a sorted list of log files.
fn expand_log_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, Box<dyn Error>> {
    let mut out = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found = Vec::new();
            for entry in std::fs::read_dir(input)? {
                let path = entry?.path();
                if is_log_file(&path) {
                    found.push(path);
                }
            }
            found.sort();
            if found.is_empty() {
                return Err(format!("no .jsonl or .csv logs in {}", input.display()).into());
            }
            out.extend(found);
        } else {
            out.push(input.clone());
        }
    }
    if out.is_empty() {
        return Err("no input logs".into());
    }
    Ok(out)
}

fn is_log_file(path: &Path) -> bool {
    path.is_file()
        && matches!(
            path.extension().and_then(|e| e.to_str()),
            Some("jsonl") | Some("csv")
        )
}

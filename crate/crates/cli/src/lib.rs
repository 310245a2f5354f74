//! Command implementations behind the `roadwatch` binary.
//!
//! Each command returns a JSON summary on success or a [`CliError`] that
//! carries the process exit code.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use log::info;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use roadwatch_core::calib::{CalibFileError, CalibrationFile, CameraCalibration};
use roadwatch_core::eval::{evaluate, DEFAULT_L_IOU};
use roadwatch_core::pipeline::{group_by_frame, read_detections, FrameOutput, Pipeline, SceneConfig};
use roadwatch_core::simulate::{simulate_scenario, GroundTruthRecord, ScenarioConfig, ScenarioTruth};

pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input data.
    #[error("{0}")]
    Data(String),
    /// Invalid configuration or flags.
    #[error("{0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Data(_) => EXIT_DATA,
            CliError::Config(_) => EXIT_CONFIG,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_json<T: DeserializeOwned>(path: &Path, as_config: bool) -> Result<T> {
    let parsed = serde_json::from_reader(open(path)?);
    parsed.map_err(|e| {
        let msg = format!("{}: {e}", path.display());
        if as_config {
            CliError::Config(msg)
        } else {
            CliError::Data(msg)
        }
    })
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::Data(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| CliError::Data(format!("{}: line {}: {e}", path.display(), i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

fn out_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Data(format!("cannot write {}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| out_err(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Data(e.to_string()))?;
    w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| out_err(path, e))
}

fn write_jsonl<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| CliError::Data(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| out_err(path, e))?;
    }
    w.flush().map_err(|e| out_err(path, e))
}

fn make_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| out_err(dir, e))
}

/// Written next to every command's outputs. Holds the only
/// non-reproducible values (timestamps).
#[derive(Serialize)]
struct RunManifest<'a> {
    command: &'a str,
    inputs: Value,
    outputs: Value,
    seed: Option<u64>,
    version: &'a str,
    started_unix_s: f64,
    elapsed_s: f64,
}

fn write_manifest(dir: &Path, command: &str, inputs: Value, outputs: Value, seed: Option<u64>, t0: (SystemTime, Instant)) -> Result<()> {
    let m = RunManifest {
        command,
        inputs,
        outputs,
        seed,
        version: env!("CARGO_PKG_VERSION"),
        started_unix_s: t0.0.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
        elapsed_s: t0.1.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("manifest.json"), &m)
}

fn now() -> (SystemTime, Instant) {
    (SystemTime::now(), Instant::now())
}

fn load_calibration(path: &Path) -> Result<(CameraCalibration, CalibrationFile)> {
    let file: CalibrationFile = read_json(path, true)?;
    let cal = file.resolve().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((cal, file))
}

/// Fits both vanishing points from labeled road lines and writes the full
/// calibration.
pub fn cmd_calibrate(lines: &Path, out: &Path) -> Result<Value> {
    let file: CalibrationFile = read_json(lines, false)?;
    let cal = file.resolve().map_err(|e| match e {
        CalibFileError::MissingPrincipalPoint => CliError::Config(e.to_string()),
        other => CliError::Data(other.to_string()),
    })?;
    let done = file.completed(&cal);
    write_json(out, &done)?;
    Ok(json!({
        "command": "calibrate",
        "out": out.display().to_string(),
        "u": cal.u(),
        "v": cal.v(),
        "w": cal.w(),
        "f": cal.focal(),
    }))
}

/// Renders a scenario into `out`.
pub fn cmd_simulate(scenario: &Path, seed: u64, out: &Path) -> Result<Value> {
    let t0 = now();
    let cfg: ScenarioConfig = read_json(scenario, true)?;
    let sim = simulate_scenario(&cfg, seed).map_err(|e| CliError::Config(e.to_string()))?;
    make_dir(out)?;
    write_jsonl(&out.join("detections.jsonl"), &sim.detections)?;
    write_jsonl(&out.join("ground_truth.jsonl"), &sim.ground_truth)?;
    write_json(&out.join("scenario_gt.json"), &sim.scenario)?;
    write_json(&out.join("calibration.json"), &sim.calibration)?;
    write_json(&out.join("lines.json"), &sim.lines)?;
    let files = ["detections.jsonl", "ground_truth.jsonl", "scenario_gt.json", "calibration.json", "lines.json"];
    write_manifest(out, "simulate", json!({ "scenario": scenario }), json!(files), Some(seed), t0)?;
    Ok(json!({
        "command": "simulate",
        "out": out.display().to_string(),
        "seed": seed,
        "frames": cfg.duration,
        "vehicles": cfg.vehicles.len(),
        "detections": sim.detections.len(),
    }))
}

#[derive(Clone, Debug, Default)]
pub struct RunArgs {
    pub calib: PathBuf,
    pub scene: Option<PathBuf>,
    pub detections: PathBuf,
    pub out: PathBuf,
    pub threshold: Option<f64>,
    pub horizons: Option<Vec<f64>>,
    pub grid_cell: Option<f64>,
}

/// Runs the pipeline over a detections stream.
pub fn cmd_run(args: &RunArgs) -> Result<Value> {
    let t0 = now();
    let (cal, cal_file) = load_calibration(&args.calib)?;
    let mut scene: SceneConfig = match &args.scene {
        Some(p) => read_json(p, true)?,
        None => SceneConfig::default(),
    };
    if let Some(t) = args.threshold {
        scene.alert_threshold = t;
    }
    if let Some(h) = &args.horizons {
        scene.horizons = h.clone();
    }
    if let Some(g) = args.grid_cell {
        scene.grid_cell = g;
    }
    scene.validate().map_err(|e| CliError::Config(e.to_string()))?;
    let image_size = scene
        .image_size
        .or(cal_file.image_size)
        .ok_or_else(|| CliError::Config("image size is given neither in the scene nor in the calibration".into()))?;

    let records = read_detections(open(&args.detections)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", args.detections.display())))?;
    let mut pipeline = Pipeline::new(scene, cal, image_size).map_err(|e| CliError::Config(e.to_string()))?;

    make_dir(&args.out)?;
    let danger_dir = args.out.join("danger");
    let frames_path = args.out.join("frames.jsonl");
    let alerts_path = args.out.join("alerts.jsonl");
    let mut frames_w = create(&frames_path)?;
    let mut alerts_w = create(&alerts_path)?;
    let (mut n_frames, mut n_alerts, mut n_rasters, mut n_dropped) = (0usize, 0usize, 0usize, 0usize);
    let mut tracks = std::collections::BTreeSet::new();
    for (frame, batch) in group_by_frame(records) {
        let mut out = pipeline.process_frame(frame, batch).map_err(|e| CliError::Data(e.to_string()))?;
        for (summary, map) in out.danger.iter_mut().zip(&out.danger_maps) {
            if map.max() <= 0.0 {
                continue;
            }
            if n_rasters == 0 {
                make_dir(&danger_dir)?;
            }
            let stem = format!("frame_{:06}_h{:03}", frame, (map.t_offset * 1000.0).round() as u64);
            let pgm = danger_dir.join(format!("{stem}.pgm"));
            fs::write(&pgm, map.to_pgm()).map_err(|e| out_err(&pgm, e))?;
            write_json(&danger_dir.join(format!("{stem}.json")), &map.sidecar())?;
            summary.raster = Some(format!("danger/{stem}.pgm"));
            n_rasters += 1;
        }
        for a in &out.alerts {
            serde_json::to_writer(&mut alerts_w, a).map_err(|e| CliError::Data(e.to_string()))?;
            alerts_w.write_all(b"\n").map_err(|e| out_err(&alerts_path, e))?;
        }
        serde_json::to_writer(&mut frames_w, &out).map_err(|e| CliError::Data(e.to_string()))?;
        frames_w.write_all(b"\n").map_err(|e| out_err(&frames_path, e))?;
        n_frames += 1;
        n_alerts += out.alerts.len();
        n_dropped += out.dropped.len();
        tracks.extend(out.tracks.iter().map(|t| t.track_id));
    }
    frames_w.flush().map_err(|e| out_err(&frames_path, e))?;
    alerts_w.flush().map_err(|e| out_err(&alerts_path, e))?;
    info!("processed {n_frames} frames, {} tracks, {n_alerts} alerts", tracks.len());

    let inputs = json!({ "calib": args.calib, "scene": args.scene, "detections": args.detections });
    write_manifest(&args.out, "run", inputs, json!(["frames.jsonl", "alerts.jsonl", "danger/"]), None, t0)?;
    Ok(json!({
        "command": "run",
        "out": args.out.display().to_string(),
        "frames": n_frames,
        "tracks": tracks.len(),
        "alerts": n_alerts,
        "rasters": n_rasters,
        "dropped": n_dropped,
    }))
}

#[derive(Clone, Debug, Default)]
pub struct EvalArgs {
    /// Directory written by `run`.
    pub outputs: PathBuf,
    /// Directory written by `simulate`.
    pub gt: PathBuf,
    /// Calibration used for distance errors; defaults to the ground truth's.
    pub calib: Option<PathBuf>,
    /// Report path.
    pub out: PathBuf,
}

/// Scores a pipeline run against simulator ground truth.
pub fn cmd_eval(args: &EvalArgs) -> Result<Value> {
    let frames: Vec<FrameOutput> = read_jsonl(&args.outputs.join("frames.jsonl"))?;
    let truth: Vec<GroundTruthRecord> = read_jsonl(&args.gt.join("ground_truth.jsonl"))?;
    let scenario: ScenarioTruth = read_json(&args.gt.join("scenario_gt.json"), false)?;
    let calib_path = args.calib.clone().unwrap_or_else(|| args.gt.join("calibration.json"));
    let (cal, _) = load_calibration(&calib_path)?;
    let report = evaluate(&frames, &truth, &scenario, &cal, DEFAULT_L_IOU).map_err(|e| CliError::Data(e.to_string()))?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        make_dir(parent)?;
    }
    write_json(&args.out, &report)?;
    Ok(json!({
        "command": "eval",
        "out": args.out.display().to_string(),
        "recall": report.matching.recall,
        "speed_abs_mean_kmh": report.speed.as_ref().map(|s| s.abs_mean),
    }))
}

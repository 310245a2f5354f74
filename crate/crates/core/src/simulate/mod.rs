//! Synthetic scenes: cuboid vehicles driving on a flat road, seen through a
//! known pinhole camera. Emits detections in the pipeline's input format
//! together with exact ground truth.

mod camera;

use std::collections::BTreeSet;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::box3d::{Contour, Quadrangle};
use crate::calib::{CalibrationFile, LineSegment, ParallelLines};
use crate::eval::{LineGroup, MeasurementLine, PeriodRecord};
use crate::geom::{convex_hull, ImagePoint, PlanePoint};
use crate::pipeline::{BBox, DetectionRecord, VehicleClass};

pub use camera::{forward_project, CameraSpec, SimCamera};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("point is not in front of the camera")]
    BehindCamera,
    #[error("invalid scenario: {0}")]
    Config(String),
}

fn default_class() -> VehicleClass {
    VehicleClass::Car
}

fn default_true() -> bool {
    true
}

/// One cuboid vehicle. Positions are road-frame meters `[lateral, along]`
/// of the footprint centre, measured from the point below the camera.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub id: u64,
    #[serde(default = "default_class")]
    pub class: VehicleClass,
    /// Length, width, height in meters.
    pub dimensions: [f64; 3],
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    #[serde(default)]
    pub acceleration: [f64; 2],
    #[serde(default)]
    pub spawn: u64,
    /// First frame without the vehicle; defaults to the scenario end.
    #[serde(default)]
    pub despawn: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Gaussian jitter on contour vertices, pixels.
    #[serde(default)]
    pub contour_sigma_px: f64,
    /// Chance that a visible vehicle is missing from a frame's detections.
    #[serde(default)]
    pub drop_prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub camera: CameraSpec,
    pub vehicles: Vec<VehicleSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    /// Number of frames.
    pub duration: u64,
    /// Along-road interval `[from, to]` in meters.
    #[serde(default)]
    pub measurement_area: Option<[f64; 2]>,
    /// Whether detections carry the true vehicle IDs.
    #[serde(default = "default_true")]
    pub emit_track_ids: bool,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.duration == 0 {
            return bad("duration must be positive".into());
        }
        let mut ids = BTreeSet::new();
        for v in &self.vehicles {
            if !ids.insert(v.id) {
                return bad(format!("duplicate vehicle id {}", v.id));
            }
            if v.dimensions.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
                return bad(format!("vehicle {}: dimensions must be positive", v.id));
            }
            let all = v.position.iter().chain(&v.velocity).chain(&v.acceleration);
            if all.into_iter().any(|x| !x.is_finite()) {
                return bad(format!("vehicle {}: non-finite motion", v.id));
            }
            if v.despawn.is_some_and(|d| d <= v.spawn) {
                return bad(format!("vehicle {}: despawn must follow spawn", v.id));
            }
        }
        if !(self.noise.contour_sigma_px >= 0.0) || !(0.0..=1.0).contains(&self.noise.drop_prob) {
            return bad("noise: contour_sigma_px >= 0 and drop_prob in [0, 1] required".into());
        }
        if let Some([a, b]) = self.measurement_area {
            if !(a < b) {
                return bad("measurement_area must be an increasing interval".into());
            }
        }
        Ok(())
    }
}

/// Exact state of one vehicle in one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub frame: u64,
    pub vehicle: u64,
    /// Footprint centre, plane coordinates.
    pub center: PlanePoint,
    /// Footprint centre, road meters `[lateral, along]`.
    pub center_m: [f64; 2],
    /// Plane units per second.
    pub velocity: Vector2<f64>,
    pub speed_kmh: f64,
    /// Bottom corners in plane coordinates.
    pub footprint: Quadrangle,
    /// Projected cuboid corners: bottom ring then top ring, each ordered
    /// (rear, right), (front, right), (front, left), (rear, left). Absent
    /// when a corner is behind the camera.
    pub corners_image: Option<[ImagePoint; 8]>,
    /// Every corner projects inside the image.
    pub visible: bool,
    pub in_area: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaTruth {
    pub along_m: [f64; 2],
    /// The same interval on the plane's `t` axis, ascending.
    pub plane_t: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VehicleSpeed {
    pub id: u64,
    pub speed_kmh: f64,
}

/// Scenario-wide ground truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTruth {
    pub fps: f64,
    pub lambda: f64,
    pub image_size: [u32; 2],
    pub true_u: ImagePoint,
    pub true_v: ImagePoint,
    pub true_w: ImagePoint,
    pub measurement_area: Option<AreaTruth>,
    /// Presence intervals in the measurement area.
    pub periods: Vec<PeriodRecord>,
    /// Mean speed inside the measurement area.
    pub area_speeds: Vec<VehicleSpeed>,
    pub lines: Vec<MeasurementLine>,
}

pub struct Simulation {
    pub detections: Vec<DetectionRecord>,
    pub ground_truth: Vec<GroundTruthRecord>,
    pub scenario: ScenarioTruth,
    /// The true calibration.
    pub calibration: CalibrationFile,
    /// Road markings for fitting the calibration.
    pub lines: CalibrationFile,
}

/// Vehicle pose at a time since spawn.
fn kinematics(v: &VehicleSpec, dt: f64) -> (Vector2<f64>, Vector2<f64>) {
    let p0 = Vector2::from(v.position);
    let v0 = Vector2::from(v.velocity);
    let a = Vector2::from(v.acceleration);
    (p0 + v0 * dt + a * (0.5 * dt * dt), v0 + a * dt)
}

/// Road-frame corners `(lateral, along, up)` of a cuboid centred at `p`.
pub fn cuboid_corners(p: Vector2<f64>, dims: [f64; 3]) -> [(f64, f64, f64); 8] {
    let [l, w, h] = dims;
    let ring = [(-0.5, 0.5), (0.5, 0.5), (0.5, -0.5), (-0.5, -0.5)];
    let mut out = [(0.0, 0.0, 0.0); 8];
    for (k, (fa, fl)) in ring.iter().enumerate() {
        out[k] = (p.x + fl * w, p.y + fa * l, 0.0);
        out[k + 4] = (p.x + fl * w, p.y + fa * l, h);
    }
    out
}

fn road_markings(cam: &SimCamera) -> Vec<MeasurementLine> {
    let mut out = Vec::new();
    let mut push = |a: (f64, f64), b: (f64, f64), group: LineGroup| {
        let pa = cam.project(&cam.to_camera(a.0, a.1, 0.0));
        let pb = cam.project(&cam.to_camera(b.0, b.1, 0.0));
        if let (Ok(pa), Ok(pb)) = (pa, pb) {
            if cam.in_image(pa) && cam.in_image(pb) && pa.dist(pb) > 20.0 {
                let length_m = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
                out.push(MeasurementLine { a: pa, b: pb, length_m, direction: group });
            }
        }
    };
    for lat in [-5.25, -1.75, 1.75, 5.25] {
        for start in [10.0, 20.0, 30.0, 40.0, 55.0] {
            push((lat, start), (lat, start + 6.0), LineGroup::TowardU);
        }
    }
    for along in [12.0, 20.0, 30.0, 45.0, 60.0] {
        push((-5.25, along), (5.25, along), LineGroup::TowardV);
        push((-8.75, along), (-5.25, along), LineGroup::TowardV);
        push((5.25, along), (8.75, along), LineGroup::TowardV);
    }
    out
}

/// Renders a scenario. All randomness comes from `seed`.
pub fn simulate_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<Simulation, SimError> {
    cfg.validate()?;
    let cam = SimCamera::new(cfg.camera.clone())?;
    let fps = cfg.camera.fps;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = if cfg.noise.contour_sigma_px > 0.0 {
        Some(Normal::new(0.0, cfg.noise.contour_sigma_px).expect("finite sigma"))
    } else {
        None
    };
    let area = cfg.measurement_area.map(|[a0, a1]| {
        let (t0, t1) = (cam.road_to_plane(0.0, a0).t, cam.road_to_plane(0.0, a1).t);
        AreaTruth { along_m: [a0, a1], plane_t: [t0.min(t1), t0.max(t1)] }
    });

    let mut detections = Vec::new();
    let mut truth = Vec::new();
    // per vehicle: (first, last) frame inside the area and summed speed
    let mut presence: Vec<Option<(u64, u64, f64, u64)>> = vec![None; cfg.vehicles.len()];
    for frame in 0..cfg.duration {
        for (vi, v) in cfg.vehicles.iter().enumerate() {
            if frame < v.spawn || frame >= v.despawn.unwrap_or(cfg.duration) {
                continue;
            }
            let dt = (frame - v.spawn) as f64 / fps;
            let (pos, vel) = kinematics(v, dt);
            let corners = cuboid_corners(pos, v.dimensions);
            let projected: Result<Vec<ImagePoint>, SimError> =
                corners.iter().map(|&(l, a, u)| cam.project(&cam.to_camera(l, a, u))).collect();
            let corners_image: Option<[ImagePoint; 8]> = projected.ok().map(|p| p.try_into().expect("eight corners"));
            let visible = corners_image.is_some_and(|c| c.iter().all(|p| cam.in_image(*p)));
            let footprint = Quadrangle::new([0, 1, 2, 3].map(|k| cam.road_to_plane(corners[k].0, corners[k].1)));
            let in_area = cfg.measurement_area.is_some_and(|[a0, a1]| pos.y >= a0 && pos.y <= a1);
            let speed_kmh = vel.norm() * 3.6;
            if in_area {
                let e = presence[vi].get_or_insert((frame, frame, 0.0, 0));
                e.1 = frame;
                e.2 += speed_kmh;
                e.3 += 1;
            }
            truth.push(GroundTruthRecord {
                frame,
                vehicle: v.id,
                center: cam.road_to_plane(pos.x, pos.y),
                center_m: [pos.x, pos.y],
                velocity: cam.velocity_to_plane(vel),
                speed_kmh,
                footprint,
                corners_image,
                visible,
                in_area,
            });

            if !visible {
                continue;
            }
            let pts: Vec<Vector2<f64>> = corners_image.expect("visible").iter().map(|p| p.vec()).collect();
            let mut hull: Vec<ImagePoint> = convex_hull(&pts).into_iter().map(ImagePoint::from_vec).collect();
            if let Some(n) = &jitter {
                for p in hull.iter_mut() {
                    p.x += n.sample(&mut rng);
                    p.y += n.sample(&mut rng);
                }
            }
            let dropped = cfg.noise.drop_prob > 0.0 && rng.random::<f64>() < cfg.noise.drop_prob;
            if dropped {
                continue;
            }
            let Ok(contour) = Contour::new(hull.clone()) else {
                continue;
            };
            detections.push(DetectionRecord {
                frame,
                class: v.class,
                score: 1.0,
                bbox: BBox::enclosing(&hull),
                contour,
                track_id: cfg.emit_track_ids.then_some(v.id),
            });
        }
    }

    let mut periods = Vec::new();
    let mut area_speeds = Vec::new();
    for (v, p) in cfg.vehicles.iter().zip(&presence) {
        if let Some((first, last, sum, n)) = p {
            periods.push(PeriodRecord {
                id: v.id,
                enter_time: *first as f64 / fps,
                exit_time: (*last + 1) as f64 / fps,
            });
            area_speeds.push(VehicleSpeed { id: v.id, speed_kmh: sum / *n as f64 });
        }
    }

    let lines = road_markings(&cam);
    let seg = |g: LineGroup| -> Vec<LineSegment> {
        lines.iter().filter(|l| l.direction == g).map(|l| LineSegment::new(l.a, l.b)).collect()
    };
    let calib = cam.calibration();
    let image_size = Some(cfg.camera.image_size);
    let calibration = CalibrationFile::from_calibration(calib, image_size);
    let lines_file = CalibrationFile {
        u: None,
        v: None,
        c: None,
        d: cfg.camera.d,
        lambda: cam.lambda(),
        image_size,
        parallel_lines: Some(ParallelLines { u: seg(LineGroup::TowardU), v: seg(LineGroup::TowardV) }),
        derived: None,
    };
    let scenario = ScenarioTruth {
        fps,
        lambda: cam.lambda(),
        image_size: cfg.camera.image_size,
        true_u: calib.u(),
        true_v: calib.v(),
        true_w: cam.true_w(),
        measurement_area: area,
        periods,
        area_speeds,
        lines,
    };
    Ok(Simulation { detections, ground_truth: truth, scenario, calibration, lines: lines_file })
}

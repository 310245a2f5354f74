//! Per-frame orchestration: filtering, track IDs, 3D boxes, kinematics,
//! alerts and danger maps.

mod config;
mod record;
mod tracker;

use std::collections::BTreeMap;

use log::debug;
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::box3d::{bottom_quadrangle, box_from_contour, BoxError, Quadrangle};
use crate::calib::{CameraCalibration, PlaneBasis};
use crate::danger::{danger_map, proximity_alerts, vehicle_heatmap, DangerMap, GridSpec, ProximityAlert};
use crate::geom::{polygon_contains, PlanePoint};
use crate::kinematics::{predict, speed_kmh, PredictionConfig, PredictionSnapshot, TrackState};

pub use config::{ConfigError, SceneConfig};
pub use record::{
    group_by_frame, parse_detection_line, read_detections, BBox, DetectionRecord, InputError, RecordError,
    VehicleClass, CONTOUR_BBOX_TOLERANCE_PX,
};
pub use tracker::{associate_tracks, IouTracker};

/// Keeps detections that are large enough, centred on the road and clear
/// of the image border.
pub fn filter_detections(dets: Vec<DetectionRecord>, cfg: &SceneConfig, image_size: [u32; 2]) -> Vec<DetectionRecord> {
    let road: Option<Vec<Vector2<f64>>> = cfg.road_polygon.as_ref().map(|p| p.iter().map(|q| q.vec()).collect());
    let (w, h) = (f64::from(image_size[0]), f64::from(image_size[1]));
    let m = cfg.border_margin;
    dets.into_iter()
        .filter(|d| d.bbox.area() >= cfg.min_area)
        .filter(|d| road.as_ref().is_none_or(|poly| polygon_contains(poly, d.bbox.center().vec())))
        .filter(|d| {
            let b = &d.bbox;
            b.x >= m && b.y >= m && b.x + b.w <= w - m && b.y + b.h <= h - m
        })
        .collect()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error("frame {got} does not follow frame {last}")]
    StaleFrame { last: u64, got: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackOutput {
    pub track_id: u64,
    pub class: VehicleClass,
    pub footprint: Quadrangle,
    pub center: PlanePoint,
    /// Smoothed plane velocity, plane units per second.
    pub velocity: Option<Vector2<f64>>,
    pub speed_kmh: Option<f64>,
    /// Frames observed so far.
    pub history: usize,
    pub predictions: Vec<PredictionSnapshot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroppedDetection {
    pub track_id: Option<u64>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DangerSummary {
    pub t_offset: f64,
    pub max: f64,
    pub cells_above_half: usize,
    pub grid: GridSpec,
    /// Raster file name, filled in by whoever writes it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raster: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameOutput {
    pub frame: u64,
    pub tracks: Vec<TrackOutput>,
    pub alerts: Vec<ProximityAlert>,
    pub danger: Vec<DangerSummary>,
    pub dropped: Vec<DroppedDetection>,
    #[serde(skip)]
    pub danger_maps: Vec<DangerMap>,
}

/// Sequential processing state for one camera stream.
pub struct Pipeline {
    cfg: SceneConfig,
    calib: CameraCalibration,
    basis: PlaneBasis,
    image_size: [u32; 2],
    tracks: BTreeMap<u64, TrackState>,
    tracker: IouTracker,
    last_frame: Option<u64>,
}

impl Pipeline {
    pub fn new(cfg: SceneConfig, calib: CameraCalibration, image_size: [u32; 2]) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let basis = calib.plane_basis();
        let tracker = IouTracker::new(cfg.max_age, cfg.iou_gate);
        Ok(Self { cfg, calib, basis, image_size, tracks: BTreeMap::new(), tracker, last_frame: None })
    }

    pub fn config(&self) -> &SceneConfig {
        &self.cfg
    }

    pub fn calibration(&self) -> &CameraCalibration {
        &self.calib
    }

    pub fn track(&self, id: u64) -> Option<&TrackState> {
        self.tracks.get(&id)
    }

    fn footprint(&self, det: &DetectionRecord) -> Result<Quadrangle, BoxError> {
        let bx = box_from_contour(&det.contour, &self.calib)?;
        bottom_quadrangle(&bx, &self.calib, &self.basis)
    }

    fn prediction_config(&self) -> PredictionConfig {
        let lambda = self.calib.lambda();
        PredictionConfig { fps: self.cfg.fps, sigma0: self.cfg.sigma0 / lambda, sigma_rate: self.cfg.sigma_rate / lambda }
    }

    /// Runs one frame through the full chain.
    pub fn process_frame(&mut self, frame: u64, dets: Vec<DetectionRecord>) -> Result<FrameOutput, PipelineError> {
        if let Some(last) = self.last_frame {
            if frame <= last {
                return Err(PipelineError::StaleFrame { last, got: frame });
            }
        }
        self.last_frame = Some(frame);

        let kept = filter_detections(dets, &self.cfg, self.image_size);
        if let Some(max_id) = kept.iter().filter_map(|d| d.track_id).max() {
            self.tracker.reserve_above(max_id);
        }
        let mut labeled = self.tracker.assign(frame, kept);
        labeled.sort_by_key(|d| d.track_id);

        let mut dropped = Vec::new();
        let mut observed: Vec<(u64, VehicleClass, Quadrangle)> = Vec::new();
        for det in &labeled {
            let id = det.track_id.expect("tracker labels every detection");
            if observed.last().is_some_and(|(prev, _, _)| *prev == id) {
                dropped.push(DroppedDetection { track_id: Some(id), reason: "duplicate track id in frame".into() });
                continue;
            }
            match self.footprint(det) {
                Ok(q) => observed.push((id, det.class, q)),
                Err(e) => {
                    debug!("frame {frame}: dropping detection of track {id}: {e}");
                    dropped.push(DroppedDetection { track_id: Some(id), reason: e.to_string() });
                }
            }
        }

        let max_age = self.cfg.max_age;
        self.tracks.retain(|_, t| frame.saturating_sub(t.last_frame) <= max_age);

        let pcfg = self.prediction_config();
        let mut tracks = Vec::with_capacity(observed.len());
        for (id, class, q) in observed {
            let t = match self.tracks.get_mut(&id) {
                Some(t) => {
                    t.update(q, frame, self.cfg.fps, self.cfg.delta).expect("frame order checked above");
                    t
                }
                None => self.tracks.entry(id).or_insert_with(|| TrackState::new(id, frame, q)),
            };
            let predictions = if t.len() >= self.cfg.min_history.max(2) && !self.cfg.horizons.is_empty() {
                predict(t, &self.cfg.horizons, &pcfg).unwrap_or_default()
            } else {
                Vec::new()
            };
            tracks.push(TrackOutput {
                track_id: id,
                class,
                footprint: q,
                center: t.latest().center,
                velocity: t.v_s,
                speed_kmh: t.v_s.map(|v| speed_kmh(v, self.calib.lambda())),
                history: t.len(),
                predictions,
            });
        }

        let fps: Vec<(u64, Quadrangle)> = tracks.iter().map(|t| (t.track_id, t.footprint)).collect();
        let alerts = proximity_alerts(frame, &fps, self.cfg.alert_threshold, self.calib.lambda());
        let danger_maps = self.danger_maps(&tracks);
        let danger = danger_maps
            .iter()
            .map(|m| DangerSummary {
                t_offset: m.t_offset,
                max: m.max(),
                cells_above_half: m.cells.iter().filter(|&&p| p > 0.5).count(),
                grid: m.grid,
                raster: None,
            })
            .collect();
        Ok(FrameOutput { frame, tracks, alerts, danger, dropped, danger_maps })
    }

    /// One danger map per horizon over every predicted vehicle.
    fn danger_maps(&self, tracks: &[TrackOutput]) -> Vec<DangerMap> {
        let cell = self.cfg.grid_cell / self.calib.lambda();
        let mut out = Vec::new();
        for (k, &tau) in self.cfg.horizons.iter().enumerate() {
            let snaps: Vec<(u64, &PredictionSnapshot)> =
                tracks.iter().filter_map(|t| t.predictions.get(k).map(|s| (t.track_id, s))).collect();
            if snaps.is_empty() {
                continue;
            }
            let grid = GridSpec::covering(snaps.iter().map(|(_, s)| (&s.footprint, 4.0 * s.sigma() + cell)), cell)
                .expect("non-empty footprints give a grid");
            let heat: Vec<_> = snaps
                .iter()
                .map(|(id, s)| vehicle_heatmap(*id, s, &grid).expect("grid covers every footprint"))
                .collect();
            match danger_map(&heat) {
                Ok(m) => out.push(m),
                Err(e) => debug!("danger map at +{tau}s skipped: {e}"),
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::box3d::Contour;
    use crate::geom::ImagePoint;

    fn det(b: BBox) -> DetectionRecord {
        let contour = Contour::new(vec![
            ImagePoint::new(b.x, b.y),
            ImagePoint::new(b.x + b.w, b.y),
            ImagePoint::new(b.x + b.w, b.y + b.h),
        ])
        .unwrap();
        DetectionRecord { frame: 0, class: VehicleClass::Truck, score: 0.8, bbox: b, contour, track_id: Some(1) }
    }

    #[test]
    fn filter_rules() {
        let cfg = SceneConfig {
            min_area: 400.0,
            road_polygon: Some(vec![
                ImagePoint::new(0.0, 0.0),
                ImagePoint::new(500.0, 0.0),
                ImagePoint::new(500.0, 500.0),
                ImagePoint::new(0.0, 500.0),
            ]),
            ..Default::default()
        };
        let size = [1000, 1000];
        let small = det(BBox::new(100.0, 100.0, 20.0, 10.0));
        let off_road = det(BBox::new(600.0, 600.0, 50.0, 50.0));
        let border = det(BBox::new(0.0, 100.0, 50.0, 50.0));
        let good = det(BBox::new(100.0, 100.0, 50.0, 50.0));
        let out = filter_detections(vec![small, off_road, border, good.clone()], &cfg, size);
        assert_eq!(out, vec![good]);
        assert_eq!(filter_detections(out.clone(), &cfg, size), out);
    }

    #[test]
    fn empty_frame_and_stale_frames() {
        let cal = CameraCalibration::derive(
            ImagePoint::new(3000.0, -500.0),
            ImagePoint::new(-2000.0, -400.0),
            ImagePoint::new(960.0, 540.0),
            10.0,
            1.0,
        )
        .unwrap();
        let mut p = Pipeline::new(SceneConfig::default(), cal, [1920, 1080]).unwrap();
        let out = p.process_frame(4, vec![]).unwrap();
        assert!(out.tracks.is_empty() && out.alerts.is_empty() && out.danger.is_empty());
        assert_eq!(p.process_frame(4, vec![]), Err(PipelineError::StaleFrame { last: 4, got: 4 }));
    }
}

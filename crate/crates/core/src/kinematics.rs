//! Per-vehicle tracking state on the road plane, speed estimation and
//! short-horizon prediction.
//!
//! Speeds are kept as plane-space vectors in plane units per second; the
//! scalar speed is their magnitude. Time is split into slots of one frame
//! interval, and predictions assume zero acceleration.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::box3d::Quadrangle;
use crate::geom::PlanePoint;

/// Default exponential smoothing factor.
pub const DEFAULT_DELTA: f64 = 0.86;

/// Tracks with fewer frames than this do not emit predictions.
pub const DEFAULT_MIN_HISTORY: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("frame {got} does not follow frame {last}")]
    NonMonotonicFrame { last: u64, got: u64 },
    #[error("prediction needs at least 2 frames of history, got {0}")]
    InsufficientHistory(usize),
    #[error("smoothing factor {0} outside [0, 1)")]
    InvalidDelta(f64),
    #[error("frame rate {0} must be positive")]
    InvalidFps(f64),
    #[error("prediction horizon {0} must be positive")]
    InvalidHorizon(f64),
}

/// Eq-3 center: arithmetic mean of the four footprint corners.
pub fn center(footprint: &Quadrangle) -> PlanePoint {
    footprint.center()
}

/// Converts a plane-space speed to km/h.
pub fn speed_kmh(v: Vector2<f64>, lambda: f64) -> f64 {
    v.norm() * lambda * 3.6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub frame: u64,
    pub footprint: Quadrangle,
    pub center: PlanePoint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackState {
    pub track_id: u64,
    pub history: Vec<HistoryEntry>,
    /// Raw speed from the last two observations.
    pub v_r: Option<Vector2<f64>>,
    /// Exponentially smoothed speed.
    pub v_s: Option<Vector2<f64>>,
    pub last_frame: u64,
}

impl TrackState {
    pub fn new(track_id: u64, frame: u64, footprint: Quadrangle) -> Self {
        Self {
            track_id,
            history: vec![HistoryEntry { frame, footprint, center: footprint.center() }],
            v_r: None,
            v_s: None,
            last_frame: frame,
        }
    }

    pub fn latest(&self) -> &HistoryEntry {
        self.history.last().expect("track history is never empty")
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// Appends an observation and refreshes the raw and smoothed speeds.
    ///
    /// The raw speed divides by the actual number of elapsed frames, so a
    /// track that skips frames keeps an unbiased speed.
    pub fn update(&mut self, footprint: Quadrangle, frame: u64, fps: f64, delta: f64) -> Result<(), KinematicsError> {
        if frame <= self.last_frame {
            return Err(KinematicsError::NonMonotonicFrame { last: self.last_frame, got: frame });
        }
        if !(fps > 0.0) || !fps.is_finite() {
            return Err(KinematicsError::InvalidFps(fps));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(KinematicsError::InvalidDelta(delta));
        }
        let c = footprint.center();
        let prev = self.latest().center;
        let gap = (frame - self.last_frame) as f64;
        let v_r = (c - prev) * fps / gap;
        self.v_s = Some(match self.v_s {
            Some(vs) => vs * delta + v_r * (1.0 - delta),
            None => v_r,
        });
        self.v_r = Some(v_r);
        self.history.push(HistoryEntry { frame, footprint, center: c });
        self.last_frame = frame;
        Ok(())
    }

    /// Current state for the predictor, once a speed is known.
    pub fn state(&self) -> Option<KinematicState> {
        let last = self.latest();
        self.v_s.map(|velocity| KinematicState { center: last.center, velocity, footprint: last.footprint })
    }
}

/// Position, velocity and shape of a vehicle at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KinematicState {
    pub center: PlanePoint,
    pub velocity: Vector2<f64>,
    pub footprint: Quadrangle,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionConfig {
    pub fps: f64,
    /// Position standard deviation at slot 0, plane units.
    pub sigma0: f64,
    /// Growth of the standard deviation per slot, plane units.
    pub sigma_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSnapshot {
    pub t_offset: f64,
    pub center: PlanePoint,
    pub speed: Vector2<f64>,
    pub acceleration: Vector2<f64>,
    /// Isotropic position variance, plane units squared.
    pub variance: f64,
    pub footprint: Quadrangle,
}

impl PredictionSnapshot {
    pub fn sigma(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// Slot index of a horizon: the nearest whole number of frames.
pub fn slot_index(t_offset: f64, fps: f64) -> u64 {
    (t_offset * fps).round().max(0.0) as u64
}

/// Zero-acceleration prediction from an explicit state.
pub fn predict_state(
    state: &KinematicState,
    horizons: &[f64],
    cfg: &PredictionConfig,
) -> Result<Vec<PredictionSnapshot>, KinematicsError> {
    if !(cfg.fps > 0.0) {
        return Err(KinematicsError::InvalidFps(cfg.fps));
    }
    horizons
        .iter()
        .map(|&tau| {
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(KinematicsError::InvalidHorizon(tau));
            }
            let shift = state.velocity * tau;
            let sigma = cfg.sigma0 + cfg.sigma_rate * slot_index(tau, cfg.fps) as f64;
            Ok(PredictionSnapshot {
                t_offset: tau,
                center: state.center + shift,
                speed: state.velocity,
                acceleration: Vector2::zeros(),
                variance: sigma * sigma,
                footprint: state.footprint.translated(shift),
            })
        })
        .collect()
}

/// Predicts a track at each horizon (seconds ahead of its last frame).
pub fn predict(
    track: &TrackState,
    horizons: &[f64],
    cfg: &PredictionConfig,
) -> Result<Vec<PredictionSnapshot>, KinematicsError> {
    match track.state() {
        Some(state) if track.len() >= 2 => predict_state(&state, horizons, cfg),
        _ => Err(KinematicsError::InsufficientHistory(track.len())),
    }
}

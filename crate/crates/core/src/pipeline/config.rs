use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::danger::{DEFAULT_ALERT_THRESHOLD_M, DEFAULT_GRID_CELL_M};
use crate::geom::ImagePoint;
use crate::kinematics::{DEFAULT_DELTA, DEFAULT_MIN_HISTORY};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid scene config: {0}")]
pub struct ConfigError(pub String);

/// Per-camera processing parameters. Lengths are in meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    /// Road area in the image. When absent every bbox centre counts as on
    /// the road.
    pub road_polygon: Option<Vec<ImagePoint>>,
    pub image_size: Option<[u32; 2]>,
    /// Smallest accepted bbox area, pixels squared.
    pub min_area: f64,
    /// Required gap between a bbox and every image edge, pixels.
    pub border_margin: f64,
    pub fps: f64,
    pub alert_threshold: f64,
    /// Prediction horizons, seconds.
    pub horizons: Vec<f64>,
    pub delta: f64,
    pub sigma0: f64,
    /// Growth of the position standard deviation per frame slot.
    pub sigma_rate: f64,
    pub grid_cell: f64,
    pub min_history: usize,
    /// Fallback tracker: frames a track may go unseen before retiring.
    pub max_age: u64,
    /// Fallback tracker: smallest IoU for a match.
    pub iou_gate: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            road_polygon: None,
            image_size: None,
            min_area: 900.0,
            border_margin: 2.0,
            fps: 25.0,
            alert_threshold: DEFAULT_ALERT_THRESHOLD_M,
            horizons: vec![0.12, 0.24],
            delta: DEFAULT_DELTA,
            sigma0: 0.1,
            sigma_rate: 0.05,
            grid_cell: DEFAULT_GRID_CELL_M,
            min_history: DEFAULT_MIN_HISTORY,
            max_age: 12,
            iou_gate: 0.1,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError(m.to_string()));
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return fail("fps must be positive");
        }
        if !(self.min_area > 0.0) {
            return fail("min_area must be positive");
        }
        if !(self.border_margin >= 0.0) {
            return fail("border_margin must be non-negative");
        }
        if !(self.alert_threshold > 0.0) {
            return fail("alert_threshold must be positive");
        }
        if self.horizons.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return fail("horizons must be positive");
        }
        if !(0.0..1.0).contains(&self.delta) {
            return fail("delta must lie in [0, 1)");
        }
        if !(self.sigma0 >= 0.0 && self.sigma_rate >= 0.0) {
            return fail("sigma0 and sigma_rate must be non-negative");
        }
        if !(self.grid_cell > 0.0) {
            return fail("grid_cell must be positive");
        }
        if !(0.0..=1.0).contains(&self.iou_gate) {
            return fail("iou_gate must lie in [0, 1]");
        }
        if let Some(poly) = &self.road_polygon {
            if poly.len() < 3 || poly.iter().any(|p| !p.is_finite()) {
                return fail("road_polygon needs at least 3 finite points");
            }
        }
        Ok(())
    }
}

use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::box3d::Contour;
use crate::geom::ImagePoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleClass {
    Car,
    Bus,
    Truck,
}

/// Axis-aligned pixel rectangle `[x, y, w, h]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn center(&self) -> ImagePoint {
        ImagePoint::new(self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = (self.x + self.w).min(other.x + other.w) - self.x.max(other.x);
        let iy = (self.y + self.h).min(other.y + other.h) - self.y.max(other.y);
        if ix <= 0.0 || iy <= 0.0 {
            return 0.0;
        }
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union > 0.0 {
            inter / union
        } else {
            0.0
        }
    }

    /// Tight box around a set of points.
    pub fn enclosing(points: &[ImagePoint]) -> Self {
        let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
        let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        Self::new(x0, y0, x1 - x0, y1 - y0)
    }

    pub fn contains(&self, p: ImagePoint, tol: f64) -> bool {
        p.x >= self.x - tol && p.x <= self.x + self.w + tol && p.y >= self.y - tol && p.y <= self.y + self.h + tol
    }
}

impl From<[f64; 4]> for BBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        Self { x, y, w, h }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

/// One vehicle observation in one frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub frame: u64,
    pub class: VehicleClass,
    pub score: f64,
    pub bbox: BBox,
    pub contour: Contour,
    #[serde(default)]
    pub track_id: Option<u64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecordError {
    #[error("invalid JSON: {0}")]
    Json(String),
    #[error("score {0} outside [0, 1]")]
    Score(f64),
    #[error("bbox must have finite coordinates and positive size")]
    BBox,
    #[error("contour point ({x}, {y}) lies outside the bbox")]
    ContourOutsideBox { x: f64, y: f64 },
}

/// Contour points may stick out of the bbox by this many pixels.
pub const CONTOUR_BBOX_TOLERANCE_PX: f64 = 1.0;

impl DetectionRecord {
    pub fn validate(&self) -> Result<(), RecordError> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(RecordError::Score(self.score));
        }
        let b = &self.bbox;
        if !([b.x, b.y, b.w, b.h].iter().all(|v| v.is_finite()) && b.w > 0.0 && b.h > 0.0) {
            return Err(RecordError::BBox);
        }
        if let Some(p) = self.contour.points().iter().find(|p| !b.contains(**p, CONTOUR_BBOX_TOLERANCE_PX)) {
            return Err(RecordError::ContourOutsideBox { x: p.x, y: p.y });
        }
        Ok(())
    }
}

/// Parses and validates one JSONL line.
pub fn parse_detection_line(line: &str) -> Result<DetectionRecord, RecordError> {
    let rec: DetectionRecord = serde_json::from_str(line).map_err(|e| RecordError::Json(e.to_string()))?;
    rec.validate()?;
    Ok(rec)
}

#[derive(Debug, Error)]
pub enum InputError {
    #[error("line {line}: {source}")]
    Record {
        line: usize,
        #[source]
        source: RecordError,
    },
    #[error("line {line}: frame {frame} comes after frame {previous}")]
    FrameOrder { line: usize, frame: u64, previous: u64 },
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

impl InputError {
    pub fn line(&self) -> usize {
        match self {
            InputError::Record { line, .. } | InputError::FrameOrder { line, .. } | InputError::Io { line, .. } => *line,
        }
    }
}

/// Reads a detections stream. Lines are numbered from 1; blank lines are
/// skipped. Frame numbers must not decrease.
pub fn read_detections<R: BufRead>(reader: R) -> Result<Vec<DetectionRecord>, InputError> {
    let mut out: Vec<DetectionRecord> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let n = idx + 1;
        let line = line.map_err(|source| InputError::Io { line: n, source })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = parse_detection_line(&line).map_err(|source| InputError::Record { line: n, source })?;
        if let Some(prev) = out.last() {
            if rec.frame < prev.frame {
                return Err(InputError::FrameOrder { line: n, frame: rec.frame, previous: prev.frame });
            }
        }
        out.push(rec);
    }
    Ok(out)
}

/// Splits a frame-sorted record list into per-frame batches.
pub fn group_by_frame(records: Vec<DetectionRecord>) -> Vec<(u64, Vec<DetectionRecord>)> {
    let mut out: Vec<(u64, Vec<DetectionRecord>)> = Vec::new();
    for rec in records {
        match out.last_mut() {
            Some((f, batch)) if *f == rec.frame => batch.push(rec),
            _ => out.push((rec.frame, vec![rec])),
        }
    }
    out
}

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{fit_vanishing_point, CalibError, CameraCalibration, LineSegment, DEFAULT_PLANE_OFFSET};
use crate::geom::ImagePoint;

/// Labeled segments for both vanishing directions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParallelLines {
    #[serde(default)]
    pub u: Vec<LineSegment>,
    #[serde(default)]
    pub v: Vec<LineSegment>,
}

/// Quantities derived from the vanishing points, written for inspection
/// only. They are recomputed on load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedSummary {
    pub f: f64,
    pub w: ImagePoint,
    pub plane: [f64; 4],
    pub euler: [f64; 3],
}

/// On-disk calibration (JSON).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<ImagePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<ImagePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<ImagePoint>,
    #[serde(default = "default_offset")]
    pub d: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_size: Option<[u32; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallel_lines: Option<ParallelLines>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub derived: Option<DerivedSummary>,
}

fn default_offset() -> f64 {
    DEFAULT_PLANE_OFFSET
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Error)]
pub enum CalibFileError {
    #[error("vanishing point {group}: {source}")]
    Fit {
        group: &'static str,
        #[source]
        source: CalibError,
    },
    #[error("vanishing point {0} is missing and no parallel lines are given for it")]
    MissingVanishingPoint(&'static str),
    #[error("principal point is missing and no image_size is given")]
    MissingPrincipalPoint,
    #[error(transparent)]
    Calib(#[from] CalibError),
}

impl CalibrationFile {
    pub fn principal_point(&self) -> Option<ImagePoint> {
        self.c.or_else(|| {
            self.image_size
                .map(|[w, h]| ImagePoint::new(f64::from(w) / 2.0, f64::from(h) / 2.0))
        })
    }

    fn vanishing_point(&self, group: &'static str) -> Result<ImagePoint, CalibFileError> {
        let (given, lines) = match group {
            "u" => (self.u, self.parallel_lines.as_ref().map(|l| &l.u)),
            _ => (self.v, self.parallel_lines.as_ref().map(|l| &l.v)),
        };
        if let Some(p) = given {
            return Ok(p);
        }
        match lines {
            Some(segs) => fit_vanishing_point(segs).map_err(|source| CalibFileError::Fit { group, source }),
            None => Err(CalibFileError::MissingVanishingPoint(group)),
        }
    }

    /// Builds the calibration, fitting `u`/`v` from parallel lines when the
    /// points themselves are absent.
    pub fn resolve(&self) -> Result<CameraCalibration, CalibFileError> {
        let u = self.vanishing_point("u")?;
        let v = self.vanishing_point("v")?;
        let c = self.principal_point().ok_or(CalibFileError::MissingPrincipalPoint)?;
        Ok(CameraCalibration::derive(u, v, c, self.d, self.lambda)?)
    }

    /// A copy with `u`, `v`, `c` filled in and the derived summary attached.
    pub fn completed(&self, cal: &CameraCalibration) -> Self {
        let basis = cal.plane_basis();
        let plane = cal.plane();
        Self {
            u: Some(cal.u()),
            v: Some(cal.v()),
            c: Some(cal.c()),
            d: cal.offset(),
            lambda: cal.lambda(),
            image_size: self.image_size,
            parallel_lines: self.parallel_lines.clone(),
            derived: Some(DerivedSummary {
                f: cal.focal(),
                w: cal.w(),
                plane: [plane.x, plane.y, plane.z, plane.w],
                euler: [basis.alpha, basis.beta, basis.gamma],
            }),
        }
    }

    pub fn from_calibration(cal: &CameraCalibration, image_size: Option<[u32; 2]>) -> Self {
        let bare = Self {
            u: None,
            v: None,
            c: None,
            d: cal.offset(),
            lambda: cal.lambda(),
            image_size,
            parallel_lines: None,
            derived: None,
        };
        bare.completed(cal)
    }
}

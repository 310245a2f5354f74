//! Camera geometry from two vanishing points.
//!
//! The camera model puts the image plane at `z = f` and the projection
//! centre at `C = [c_x, c_y, 0]`, where `c` is the principal point. Given the
//! vanishing point `u` of the traffic direction and `v` of the cross-road
//! direction, the focal length, the third (vertical) vanishing point and the
//! road plane follow in closed form. The plane offset `d` is arbitrary; the
//! scale factor `lambda` converts plane units to meters.

mod basis;
mod file;
mod vanishing;

use nalgebra::{Vector3, Vector4};
use thiserror::Error;

use crate::geom::{ImagePoint, PlanePoint, WorldPoint};

pub use basis::PlaneBasis;
pub use file::{CalibFileError, CalibrationFile, DerivedSummary, ParallelLines};
pub use vanishing::{fit_vanishing_point, LineSegment};

/// Default plane offset.
pub const DEFAULT_PLANE_OFFSET: f64 = 10.0;

/// Relative tolerance for near-zero denominators.
const SINGULAR_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibError {
    #[error("at least 2 segments are required, got {got}")]
    TooFewSegments { got: usize },
    #[error("segment {index} has coincident endpoints")]
    DegenerateSegment { index: usize },
    #[error("labeled lines do not converge (normal matrix is singular)")]
    AllParallel,
    #[error("(u - c) . (v - c) = {dot} must be negative for a real focal length")]
    NonPhysical { dot: f64 },
    #[error("vertical vanishing point lies at infinity")]
    VerticalAtInfinity,
    #[error("pixel lies on the horizon of the road plane")]
    HorizonPoint,
    #[error("scale factor must be positive and finite, got {0}")]
    InvalidScale(f64),
    #[error("plane offset must be non-zero and finite, got {0}")]
    InvalidOffset(f64),
    #[error("non-finite calibration input")]
    NonFinite,
}

/// Full camera geometry derived from `u`, `v`, `c`, `d` and `lambda`.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraCalibration {
    u: ImagePoint,
    v: ImagePoint,
    c: ImagePoint,
    f: f64,
    d: f64,
    lambda: f64,
    /// `U - C`, direction of traffic.
    dir_u: Vector3<f64>,
    /// `V - C`, cross-road direction.
    dir_v: Vector3<f64>,
    /// `(U - C) x (V - C)`, normal to the road plane.
    dir_w: Vector3<f64>,
    w: ImagePoint,
    /// Unit normal `[a, b, c]` of the road plane.
    normal: Vector3<f64>,
}

impl CameraCalibration {
    /// Derives the camera from two vanishing points.
    pub fn derive(
        u: ImagePoint,
        v: ImagePoint,
        c: ImagePoint,
        d: f64,
        lambda: f64,
    ) -> Result<Self, CalibError> {
        if !(u.is_finite() && v.is_finite() && c.is_finite()) {
            return Err(CalibError::NonFinite);
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(CalibError::InvalidScale(lambda));
        }
        if d == 0.0 || !d.is_finite() {
            return Err(CalibError::InvalidOffset(d));
        }
        let dot = (u - c).dot(&(v - c));
        if !(dot < 0.0) {
            return Err(CalibError::NonPhysical { dot });
        }
        let f = (-dot).sqrt();
        let dir_u = Vector3::new(u.x - c.x, u.y - c.y, f);
        let dir_v = Vector3::new(v.x - c.x, v.y - c.y, f);
        let dir_w = dir_u.cross(&dir_v);
        if dir_w.z.abs() <= SINGULAR_EPS * dir_u.norm() * dir_v.norm() {
            return Err(CalibError::VerticalAtInfinity);
        }
        let w = ImagePoint::new(dir_w.x / dir_w.z * f + c.x, dir_w.y / dir_w.z * f + c.y);
        let n = Vector3::new(w.x - c.x, w.y - c.y, f);
        let normal = n / n.norm();
        Ok(Self { u, v, c, f, d, lambda, dir_u, dir_v, dir_w, w, normal })
    }

    pub fn u(&self) -> ImagePoint {
        self.u
    }

    pub fn v(&self) -> ImagePoint {
        self.v
    }

    /// Third vanishing point, perpendicular to the road plane.
    pub fn w(&self) -> ImagePoint {
        self.w
    }

    /// Principal point.
    pub fn c(&self) -> ImagePoint {
        self.c
    }

    pub fn focal(&self) -> f64 {
        self.f
    }

    pub fn offset(&self) -> f64 {
        self.d
    }

    /// Meters per plane unit.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Projection centre `C = [c_x, c_y, 0]`.
    pub fn center(&self) -> WorldPoint {
        WorldPoint::new(self.c.x, self.c.y, 0.0)
    }

    pub fn dir_u(&self) -> Vector3<f64> {
        self.dir_u
    }

    pub fn dir_v(&self) -> Vector3<f64> {
        self.dir_v
    }

    pub fn dir_w(&self) -> Vector3<f64> {
        self.dir_w
    }

    /// Normalized plane coefficients `[a, b, c, d]`.
    pub fn plane(&self) -> Vector4<f64> {
        Vector4::new(self.normal.x, self.normal.y, self.normal.z, self.d)
    }

    /// Signed plane residual `a x + b y + c z + d`.
    pub fn plane_residual(&self, p: &WorldPoint) -> f64 {
        self.normal.dot(&p.coords) + self.d
    }

    /// Copy with a different scale factor.
    pub fn with_lambda(&self, lambda: f64) -> Result<Self, CalibError> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(CalibError::InvalidScale(lambda));
        }
        Ok(Self { lambda, ..self.clone() })
    }

    /// Back-projects a pixel onto the road plane.
    pub fn project_to_plane(&self, p: ImagePoint) -> Result<WorldPoint, CalibError> {
        let g = Vector3::new(p.x - self.c.x, p.y - self.c.y, self.f);
        let den = self.normal.dot(&g);
        if den.abs() <= SINGULAR_EPS * g.norm() {
            return Err(CalibError::HorizonPoint);
        }
        let c = self.center();
        let t = -(self.normal.dot(&c.coords) + self.d) / den;
        let q = c + g * t;
        // snap off the rounding left by the intersection
        Ok(q - self.normal * self.plane_residual(&q))
    }

    pub fn plane_basis(&self) -> PlaneBasis {
        PlaneBasis::from_calibration(self)
    }

    /// Pixel to 2D plane coordinates.
    pub fn image_to_plane(&self, p: ImagePoint, basis: &PlaneBasis) -> Result<PlanePoint, CalibError> {
        Ok(basis.to_plane_coords(&self.project_to_plane(p)?))
    }

    /// Real-world distance in meters between two pixels on the road.
    pub fn measure_distance(
        &self,
        p1: ImagePoint,
        p2: ImagePoint,
        basis: &PlaneBasis,
    ) -> Result<f64, CalibError> {
        let a = self.image_to_plane(p1, basis)?;
        let b = self.image_to_plane(p2, basis)?;
        Ok(self.lambda * a.dist(b))
    }
}

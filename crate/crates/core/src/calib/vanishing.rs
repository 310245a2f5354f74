use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use super::CalibError;
use crate::geom::ImagePoint;

/// Condition number above which the normal matrix counts as singular.
const MAX_CONDITION: f64 = 1e12;

/// A labeled image segment lying on one of a family of parallel road lines.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct LineSegment {
    pub a: ImagePoint,
    pub b: ImagePoint,
}

impl LineSegment {
    pub fn new(a: ImagePoint, b: ImagePoint) -> Self {
        Self { a, b }
    }

    /// Unit normal `n` and offset `c` such that the extended line is
    /// `n . x = c`.
    fn normal_form(&self) -> Option<(Vector2<f64>, f64)> {
        let d = self.b - self.a;
        let len = d.norm();
        if !(len > 0.0) || !len.is_finite() {
            return None;
        }
        let n = Vector2::new(-d.y, d.x) / len;
        Some((n, n.dot(&self.a.vec())))
    }
}

impl From<[f64; 4]> for LineSegment {
    fn from(v: [f64; 4]) -> Self {
        Self::new(ImagePoint::new(v[0], v[1]), ImagePoint::new(v[2], v[3]))
    }
}

impl From<LineSegment> for [f64; 4] {
    fn from(s: LineSegment) -> Self {
        [s.a.x, s.a.y, s.b.x, s.b.y]
    }
}

/// Least-squares convergence point of a family of image lines.
///
/// Minimizes the sum of squared perpendicular distances from the returned
/// point to every extended segment, which reduces to a 2x2 linear system.
pub fn fit_vanishing_point(segments: &[LineSegment]) -> Result<ImagePoint, CalibError> {
    if segments.len() < 2 {
        return Err(CalibError::TooFewSegments { got: segments.len() });
    }
    let mut m = Matrix2::zeros();
    let mut rhs = Vector2::zeros();
    for (i, seg) in segments.iter().enumerate() {
        let (n, c) = seg.normal_form().ok_or(CalibError::DegenerateSegment { index: i })?;
        m += n * n.transpose();
        rhs += n * c;
    }
    let eig = m.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(CalibError::AllParallel);
    }
    let x = m
        .try_inverse()
        .map(|inv| inv * rhs)
        .ok_or(CalibError::AllParallel)?;
    Ok(ImagePoint::new(x.x, x.y))
}

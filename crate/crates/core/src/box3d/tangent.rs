use std::f64::consts::PI;

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::{BoxError, Contour};
use crate::geom::{boundary_distance, convex_hull, polygon_contains, ImagePoint, Line};

/// Which vanishing point a tangent pair hangs from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VanishingId {
    U,
    V,
    W,
}

/// The two extreme-tilt lines through a vanishing point that touch a
/// contour.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentPair {
    pub anchor: VanishingId,
    pub vp: ImagePoint,
    pub l_min: Line,
    pub l_max: Line,
    /// Contour points touched by `l_min` and `l_max`.
    pub touch_min: ImagePoint,
    pub touch_max: ImagePoint,
    /// Angular width of the wedge in radians.
    pub width: f64,
}

impl TangentPair {
    /// Same pair with the roles of `l_min` and `l_max` exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            l_min: self.l_max,
            l_max: self.l_min,
            touch_min: self.touch_max,
            touch_max: self.touch_min,
            ..*self
        }
    }
}

/// Tilt of the direction from `vp` to `p`, folded into `[0, pi)`.
fn tilt(vp: ImagePoint, p: ImagePoint) -> f64 {
    let d = p - vp;
    let a = d.y.atan2(d.x);
    let a = a.rem_euclid(PI);
    if a >= PI {
        0.0
    } else {
        a
    }
}

/// Tangent lines of `contour` through `vp`.
///
/// Tilts are folded into `[0, pi)`; the wedge is the narrowest contiguous
/// angular interval covering every contour point, so it survives the wrap
/// at the `0 / pi` boundary.
pub fn tangent_lines(contour: &Contour, vp: ImagePoint, anchor: VanishingId) -> Result<TangentPair, BoxError> {
    let pts = contour.points();
    let pv: Vec<Vector2<f64>> = pts.iter().map(|p| p.vec()).collect();
    let hull = convex_hull(&pv);
    let scale = pv.iter().map(|p| (p - vp.vec()).norm()).fold(0.0, f64::max).max(1.0);
    let on_or_in = if hull.len() >= 3 {
        polygon_contains(&hull, vp.vec()) || boundary_distance(&hull, vp.vec()) <= 1e-12 * scale
    } else {
        boundary_distance(&hull, vp.vec()) <= 1e-12 * scale
    };
    if on_or_in {
        return Err(BoxError::VanishingPointInsideHull(anchor));
    }

    let tilts: Vec<f64> = pts.iter().map(|&p| tilt(vp, p)).collect();
    let mut sorted = tilts.clone();
    sorted.sort_by(f64::total_cmp);
    // widest gap between consecutive tilts (including the wrap-around gap)
    let n = sorted.len();
    let mut start = sorted[0];
    let mut widest = sorted[0] + PI - sorted[n - 1];
    for i in 1..n {
        let gap = sorted[i] - sorted[i - 1];
        if gap > widest {
            widest = gap;
            start = sorted[i];
        }
    }
    let rel = |a: f64| (a - start).rem_euclid(PI);
    let mut imin = 0;
    let mut imax = 0;
    for i in 1..n {
        if rel(tilts[i]) < rel(tilts[imin]) {
            imin = i;
        }
        if rel(tilts[i]) > rel(tilts[imax]) {
            imax = i;
        }
    }
    let line_to = |p: ImagePoint| Line::through(vp, p).ok_or(BoxError::VanishingPointInsideHull(anchor));
    Ok(TangentPair {
        anchor,
        vp,
        l_min: line_to(pts[imin])?,
        l_max: line_to(pts[imax])?,
        touch_min: pts[imin],
        touch_max: pts[imax],
        width: PI - widest,
    })
}

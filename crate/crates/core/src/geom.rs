//! Small 2D geometry kit shared by the image-space and plane-space modules.

use std::ops::{Add, Sub};

use nalgebra::{Point3, Vector2};
use serde::{Deserialize, Serialize};

/// A pixel position. Origin top-left, `y` grows downwards.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct ImagePoint {
    pub x: f64,
    pub y: f64,
}

/// A point in the 2D coordinate system of the road plane.
///
/// `s` runs along the cross-road direction, `t` along the traffic direction.
/// One unit is `1 / lambda` meters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct PlanePoint {
    pub s: f64,
    pub t: f64,
}

/// A point in the camera-centred world frame used by the calibration.
pub type WorldPoint = Point3<f64>;

impl ImagePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn vec(self) -> Vector2<f64> {
        Vector2::new(self.x, self.y)
    }

    pub fn from_vec(v: Vector2<f64>) -> Self {
        Self::new(v.x, v.y)
    }

    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl PlanePoint {
    pub const fn new(s: f64, t: f64) -> Self {
        Self { s, t }
    }

    pub fn vec(self) -> Vector2<f64> {
        Vector2::new(self.s, self.t)
    }

    pub fn from_vec(v: Vector2<f64>) -> Self {
        Self::new(v.x, v.y)
    }

    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }
}

macro_rules! point_ops {
    ($ty:ident, $a:ident, $b:ident) => {
        impl From<[f64; 2]> for $ty {
            fn from(v: [f64; 2]) -> Self {
                Self { $a: v[0], $b: v[1] }
            }
        }

        impl From<$ty> for [f64; 2] {
            fn from(p: $ty) -> Self {
                [p.$a, p.$b]
            }
        }

        impl Sub for $ty {
            type Output = Vector2<f64>;
            fn sub(self, rhs: Self) -> Vector2<f64> {
                Vector2::new(self.$a - rhs.$a, self.$b - rhs.$b)
            }
        }

        impl Add<Vector2<f64>> for $ty {
            type Output = $ty;
            fn add(self, rhs: Vector2<f64>) -> $ty {
                Self { $a: self.$a + rhs.x, $b: self.$b + rhs.y }
            }
        }

        impl Sub<Vector2<f64>> for $ty {
            type Output = $ty;
            fn sub(self, rhs: Vector2<f64>) -> $ty {
                Self { $a: self.$a - rhs.x, $b: self.$b - rhs.y }
            }
        }
    };
}

point_ops!(ImagePoint, x, y);
point_ops!(PlanePoint, s, t);

/// z-component of the 2D cross product.
#[inline]
pub fn cross(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

/// An infinite image line given by a point on it and a unit direction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub point: ImagePoint,
    pub dir: Vector2<f64>,
}

impl Line {
    /// Line through two points; `None` when they coincide.
    pub fn through(a: ImagePoint, b: ImagePoint) -> Option<Self> {
        let d = b - a;
        let n = d.norm();
        if !(n > 0.0) || !n.is_finite() {
            return None;
        }
        Some(Self { point: a, dir: d / n })
    }

    /// Intersection point, or `None` when the lines are parallel within
    /// `1e-12` (sine of the enclosed angle).
    pub fn intersect(&self, other: &Line) -> Option<ImagePoint> {
        let den = cross(self.dir, other.dir);
        if den.abs() < 1e-12 {
            return None;
        }
        let r = other.point - self.point;
        let t = cross(r, other.dir) / den;
        Some(self.point + self.dir * t)
    }

    /// Perpendicular distance of `p` from the line.
    pub fn distance(&self, p: ImagePoint) -> f64 {
        cross(self.dir, p - self.point).abs()
    }

    /// Angle in radians between the line and the direction from `self.point`
    /// towards `target`, folded into `[0, pi/2]`.
    pub fn angle_to(&self, target: ImagePoint) -> f64 {
        let d = target - self.point;
        let n = d.norm();
        if n == 0.0 {
            return 0.0;
        }
        let s = cross(self.dir, d / n).abs().min(1.0);
        s.asin()
    }
}

/// Shoelace signed area; positive when the vertices run counterclockwise in
/// the (x right, y up) sense of the raw coordinates.
pub fn signed_area(pts: &[Vector2<f64>]) -> f64 {
    let n = pts.len();
    if n < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += cross(pts[i], pts[(i + 1) % n]);
    }
    0.5 * acc
}

/// Convex hull (Andrew's monotone chain), counterclockwise, collinear points
/// dropped.
pub fn convex_hull(pts: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let mut p: Vec<Vector2<f64>> = pts.to_vec();
    p.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let turn = |o: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>| cross(a - o, b - o);
    let mut lower: Vec<Vector2<f64>> = Vec::with_capacity(p.len());
    for &q in &p {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], q) <= 0.0 {
            lower.pop();
        }
        lower.push(q);
    }
    let mut upper: Vec<Vector2<f64>> = Vec::with_capacity(p.len());
    for &q in p.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], q) <= 0.0 {
            upper.pop();
        }
        upper.push(q);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Distance from `p` to the closed segment `a`-`b`.
pub fn segment_distance(p: Vector2<f64>, a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Even-odd containment test; points exactly on the boundary may land on
/// either side.
pub fn polygon_contains(poly: &[Vector2<f64>], p: Vector2<f64>) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n.wrapping_sub(1);
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance from `p` to the polygon region: zero inside, otherwise the
/// distance to the nearest boundary edge.
pub fn polygon_region_distance(poly: &[Vector2<f64>], p: Vector2<f64>) -> f64 {
    if polygon_contains(poly, p) {
        return 0.0;
    }
    boundary_distance(poly, p)
}

/// Distance from `p` to the polygon boundary.
pub fn boundary_distance(poly: &[Vector2<f64>], p: Vector2<f64>) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| segment_distance(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

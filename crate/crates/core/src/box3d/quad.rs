use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::geom::{signed_area, PlanePoint};

/// Four road-plane corners in cyclic order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "[PlanePoint; 4]", into = "[PlanePoint; 4]")]
pub struct Quadrangle {
    pub corners: [PlanePoint; 4],
}

impl Quadrangle {
    pub fn new(corners: [PlanePoint; 4]) -> Self {
        Self { corners }
    }

    /// Axis-aligned rectangle from two opposite corners.
    pub fn rect(s0: f64, t0: f64, s1: f64, t1: f64) -> Self {
        Self::new([
            PlanePoint::new(s0, t0),
            PlanePoint::new(s1, t0),
            PlanePoint::new(s1, t1),
            PlanePoint::new(s0, t1),
        ])
    }

    /// Arithmetic mean of the corners.
    pub fn center(&self) -> PlanePoint {
        let sum = self.corners.iter().fold(Vector2::zeros(), |acc, p| acc + p.vec());
        PlanePoint::from_vec(sum / 4.0)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.as_vecs()).abs()
    }

    pub fn translated(&self, by: Vector2<f64>) -> Self {
        Self::new(self.corners.map(|p| p + by))
    }

    pub fn as_vecs(&self) -> [Vector2<f64>; 4] {
        self.corners.map(|p| p.vec())
    }

    /// Edges AB, BC, CD, DA.
    pub fn edges(&self) -> [(PlanePoint, PlanePoint); 4] {
        let c = &self.corners;
        [(c[0], c[1]), (c[1], c[2]), (c[2], c[3]), (c[3], c[0])]
    }

    /// Axis-aligned bounds `(min, max)`.
    pub fn bounds(&self) -> (PlanePoint, PlanePoint) {
        let mut lo = self.corners[0];
        let mut hi = self.corners[0];
        for p in &self.corners[1..] {
            lo = PlanePoint::new(lo.s.min(p.s), lo.t.min(p.t));
            hi = PlanePoint::new(hi.s.max(p.s), hi.t.max(p.t));
        }
        (lo, hi)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self::new(self.corners.map(|p| PlanePoint::new(p.s * k, p.t * k)))
    }
}

impl From<[PlanePoint; 4]> for Quadrangle {
    fn from(c: [PlanePoint; 4]) -> Self {
        Self::new(c)
    }
}

impl From<Quadrangle> for [PlanePoint; 4] {
    fn from(q: Quadrangle) -> Self {
        q.corners
    }
}

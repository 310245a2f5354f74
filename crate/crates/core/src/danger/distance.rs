use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::box3d::Quadrangle;
use crate::geom::{cross, polygon_contains, segment_distance, PlanePoint};

/// Distance from `p` to the closed segment `a`-`b`.
pub fn point_edge_distance(p: PlanePoint, a: PlanePoint, b: PlanePoint) -> f64 {
    segment_distance(p.vec(), a.vec(), b.vec())
}

fn orient(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>) -> f64 {
    cross(b - a, c - a)
}

fn on_segment(a: Vector2<f64>, b: Vector2<f64>, p: Vector2<f64>) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed-segment intersection, touching included.
pub fn segments_intersect(a: Vector2<f64>, b: Vector2<f64>, c: Vector2<f64>, d: Vector2<f64>) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// True when the two quadrangles overlap, touch, or one contains the other.
pub fn quads_touch(q1: &Quadrangle, q2: &Quadrangle) -> bool {
    let (a, b) = (q1.as_vecs(), q2.as_vecs());
    for i in 0..4 {
        for j in 0..4 {
            if segments_intersect(a[i], a[(i + 1) % 4], b[j], b[(j + 1) % 4]) {
                return true;
            }
        }
    }
    polygon_contains(&a, b[0]) || polygon_contains(&b, a[0])
}

/// Minimum distance between two quadrangles.
///
/// For disjoint quadrangles one end of the closest pair is a vertex, so the
/// answer is the smallest of the 32 vertex-to-edge distances. Contact is
/// detected first and reported as exactly 0.
pub fn quad_distance(q1: &Quadrangle, q2: &Quadrangle) -> f64 {
    if quads_touch(q1, q2) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for (p, q) in [(q1, q2), (q2, q1)] {
        for v in p.corners {
            for (a, b) in q.edges() {
                best = best.min(point_edge_distance(v, a, b));
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProximityAlert {
    pub frame: u64,
    pub track_a: u64,
    pub track_b: u64,
    /// Meters.
    pub distance: f64,
    /// Meters.
    pub threshold: f64,
}

/// One alert per unordered pair whose footprints are closer than
/// `threshold` meters. Pairs are reported with `track_a < track_b` in input
/// order.
pub fn proximity_alerts(frame: u64, footprints: &[(u64, Quadrangle)], threshold: f64, lambda: f64) -> Vec<ProximityAlert> {
    let mut out = Vec::new();
    for (i, (ia, qa)) in footprints.iter().enumerate() {
        for (ib, qb) in &footprints[i + 1..] {
            if ia == ib {
                continue;
            }
            let distance = lambda * quad_distance(qa, qb);
            if distance < threshold {
                out.push(ProximityAlert {
                    frame,
                    track_a: (*ia).min(*ib),
                    track_b: (*ia).max(*ib),
                    distance,
                    threshold,
                });
            }
        }
    }
    out
}

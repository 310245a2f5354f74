//! 3D bounding boxes from vehicle contours.
//!
//! Each vanishing point contributes two tangent lines to the contour. Their
//! pairwise intersections give six silhouette corners; the remaining two
//! corners come from lines drawn back towards the vanishing points. The
//! bottom face is then projected onto the road plane as the vehicle's
//! footprint.

mod contour;
mod quad;
mod tangent;

use log::debug;
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calib::{CalibError, CameraCalibration, PlaneBasis};
use crate::geom::{boundary_distance, convex_hull, ImagePoint, Line};

pub use contour::{extract_contour, Contour, Mask};
pub use quad::Quadrangle;
pub use tangent::{tangent_lines, TangentPair, VanishingId};

/// Collinear-merge tolerance applied to contours before the tangent search.
pub const SIMPLIFY_TOLERANCE_PX: f64 = 0.5;

/// Miss distance above which the eighth vertex is reported as inconsistent.
const EIGHTH_VERTEX_WARN_PX: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoxError {
    #[error("mask has no foreground pixels")]
    EmptyMask,
    #[error("contour needs at least 3 points, got {0}")]
    ContourTooShort(usize),
    #[error("non-finite contour coordinate")]
    NonFinite,
    #[error("vanishing point {0:?} lies inside the contour hull")]
    VanishingPointInsideHull(VanishingId),
    #[error("degenerate intersection: {0}")]
    DegenerateIntersection(&'static str),
    #[error(transparent)]
    Calib(#[from] CalibError),
}

/// Box corner labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Vertex {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
    H,
}

impl Vertex {
    pub const ALL: [Vertex; 8] = [
        Vertex::A,
        Vertex::B,
        Vertex::C,
        Vertex::D,
        Vertex::E,
        Vertex::F,
        Vertex::G,
        Vertex::H,
    ];
}

/// Edges grouped by the vanishing point they converge to.
pub const V_EDGES: [(Vertex, Vertex); 4] =
    [(Vertex::A, Vertex::B), (Vertex::D, Vertex::C), (Vertex::E, Vertex::F), (Vertex::H, Vertex::G)];
pub const U_EDGES: [(Vertex, Vertex); 4] =
    [(Vertex::A, Vertex::D), (Vertex::B, Vertex::C), (Vertex::F, Vertex::G), (Vertex::E, Vertex::H)];
pub const W_EDGES: [(Vertex, Vertex); 4] =
    [(Vertex::A, Vertex::E), (Vertex::B, Vertex::F), (Vertex::D, Vertex::H), (Vertex::C, Vertex::G)];

/// Which tangent roles were exchanged before building the box.
///
/// The unswapped order matches vehicles seen from one side of the camera;
/// vehicles seen from the other sides need the `V` and/or `W` pair swapped
/// for the six tangent intersections to land on silhouette corners.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TangentOrder {
    pub swap_v: bool,
    pub swap_w: bool,
}

impl TangentOrder {
    pub const CANDIDATES: [TangentOrder; 4] = [
        TangentOrder { swap_v: false, swap_w: false },
        TangentOrder { swap_v: false, swap_w: true },
        TangentOrder { swap_v: true, swap_w: false },
        TangentOrder { swap_v: true, swap_w: true },
    ];

    pub fn is_canonical(&self) -> bool {
        !self.swap_v && !self.swap_w
    }
}

/// Eight image-space corners of a vehicle's 3D bounding box.
#[derive(Clone, Debug, PartialEq)]
pub struct Box3D {
    vertices: [ImagePoint; 8],
    pub order: TangentOrder,
}

impl Box3D {
    pub fn new(vertices: [ImagePoint; 8]) -> Self {
        Self { vertices, order: TangentOrder::default() }
    }

    pub fn vertex(&self, v: Vertex) -> ImagePoint {
        self.vertices[v as usize]
    }

    pub fn vertices(&self) -> &[ImagePoint; 8] {
        &self.vertices
    }

    /// Largest angle (radians) between a box edge and the ray from its first
    /// endpoint to the edge group's vanishing point.
    pub fn edge_residual(&self, u: ImagePoint, v: ImagePoint, w: ImagePoint) -> f64 {
        let mut worst: f64 = 0.0;
        for (edges, vp) in [(&U_EDGES, u), (&V_EDGES, v), (&W_EDGES, w)] {
            for &(a, b) in edges.iter() {
                let (pa, pb) = (self.vertex(a), self.vertex(b));
                if let Some(line) = Line::through(pa, pb) {
                    worst = worst.max(line.angle_to(vp));
                }
            }
        }
        worst
    }

    /// Convex hull of the eight corners.
    pub fn silhouette(&self) -> Vec<Vector2<f64>> {
        let pts: Vec<_> = self.vertices.iter().map(|p| p.vec()).collect();
        convex_hull(&pts)
    }
}

fn meet(a: &Line, b: &Line, what: &'static str) -> Result<ImagePoint, BoxError> {
    a.intersect(b).ok_or(BoxError::DegenerateIntersection(what))
}

fn line(a: ImagePoint, b: ImagePoint, what: &'static str) -> Result<Line, BoxError> {
    Line::through(a, b).ok_or(BoxError::DegenerateIntersection(what))
}

/// Assembles the box from the three tangent pairs.
///
/// ```text
/// A = Umax ^ Vmin    B = Vmin ^ Wmax    D = Umax ^ Wmin
/// F = Umin ^ Wmax    G = Vmax ^ Umin    H = Vmax ^ Wmin
/// E = farther from A of (F->v ^ A->w) and (H->u ^ A->w)
/// C = B->u ^ D->v
/// ```
pub fn build_box(tu: &TangentPair, tv: &TangentPair, tw: &TangentPair) -> Result<Box3D, BoxError> {
    for t in [tu, tv, tw] {
        if !(t.width > 1e-12) {
            return Err(BoxError::DegenerateIntersection("tangent wedge has zero width"));
        }
    }
    let (u, v, w) = (tu.vp, tv.vp, tw.vp);
    let a = meet(&tu.l_max, &tv.l_min, "A")?;
    let b = meet(&tv.l_min, &tw.l_max, "B")?;
    let d = meet(&tu.l_max, &tw.l_min, "D")?;
    let f = meet(&tu.l_min, &tw.l_max, "F")?;
    let g = meet(&tv.l_max, &tu.l_min, "G")?;
    let h = meet(&tv.l_max, &tw.l_min, "H")?;

    let aw = line(a, w, "A-w")?;
    let e_f = meet(&line(f, v, "F-v")?, &aw, "E_F")?;
    let e_h = meet(&line(h, u, "H-u")?, &aw, "E_H")?;
    let e = if a.dist(e_f) >= a.dist(e_h) { e_f } else { e_h };

    let c = meet(&line(b, u, "B-u")?, &line(d, v, "D-v")?, "C")?;
    if let Some(gw) = Line::through(g, w) {
        let miss = gw.distance(c);
        if miss > EIGHTH_VERTEX_WARN_PX {
            debug!("vertex C misses line G-w by {miss:.2} px");
        }
    }
    Ok(Box3D::new([a, b, c, d, e, f, g, h]))
}

/// Sum of distances from the six tangent-intersection corners to the
/// contour hull boundary.
fn silhouette_residual(bx: &Box3D, hull: &[Vector2<f64>]) -> f64 {
    [Vertex::A, Vertex::B, Vertex::D, Vertex::F, Vertex::G, Vertex::H]
        .iter()
        .map(|&k| boundary_distance(hull, bx.vertex(k).vec()))
        .sum()
}

/// Full contour-to-box step: simplify, find tangents from `u`, `v`, `w`,
/// and build the box with the tangent order that best explains the
/// silhouette.
pub fn box_from_contour(contour: &Contour, cal: &CameraCalibration) -> Result<Box3D, BoxError> {
    let simple = contour.simplified(SIMPLIFY_TOLERANCE_PX);
    if !(simple.area() > 1e-9) {
        return Err(BoxError::DegenerateIntersection("contour has zero area"));
    }
    let tu = tangent_lines(&simple, cal.u(), VanishingId::U)?;
    let tv = tangent_lines(&simple, cal.v(), VanishingId::V)?;
    let tw = tangent_lines(&simple, cal.w(), VanishingId::W)?;
    let pts: Vec<_> = simple.points().iter().map(|p| p.vec()).collect();
    let hull = convex_hull(&pts);

    let mut best: Option<(f64, Box3D)> = None;
    let mut last_err = None;
    for order in TangentOrder::CANDIDATES {
        let tv_o = if order.swap_v { tv.swapped() } else { tv };
        let tw_o = if order.swap_w { tw.swapped() } else { tw };
        match build_box(&tu, &tv_o, &tw_o) {
            Ok(mut bx) => {
                bx.order = order;
                let r = silhouette_residual(&bx, &hull);
                if r.is_finite() && best.as_ref().is_none_or(|(br, _)| r < *br) {
                    best = Some((r, bx));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((_, bx)) => Ok(bx),
        None => Err(last_err.unwrap_or(BoxError::DegenerateIntersection("no tangent order"))),
    }
}

/// Which face of the box rests on the road.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BottomFace {
    /// `{A, B, C, D}`
    Abcd,
    /// `{H, G, F, E}`
    Hgfe,
}

impl BottomFace {
    pub fn vertices(self) -> [Vertex; 4] {
        match self {
            BottomFace::Abcd => [Vertex::A, Vertex::B, Vertex::C, Vertex::D],
            BottomFace::Hgfe => [Vertex::H, Vertex::G, Vertex::F, Vertex::E],
        }
    }
}

/// Bottom face from the slope of the image vector D->A: `{A,B,C,D}` when
/// `dy/dx >= 0` (vertical counts as non-negative), `{H,G,F,E}` otherwise.
pub fn bottom_face_by_slope(bx: &Box3D) -> BottomFace {
    let da = bx.vertex(Vertex::A) - bx.vertex(Vertex::D);
    if da.x.abs() < 1e-9 || da.y / da.x >= 0.0 {
        BottomFace::Abcd
    } else {
        BottomFace::Hgfe
    }
}

/// Bottom face as the end of the vertical edges nearer to `w`: moving down
/// in 3D moves a point's image towards the vertical vanishing point.
pub fn bottom_face_by_vertical(bx: &Box3D, w: ImagePoint) -> BottomFace {
    let near_abcd: f64 = W_EDGES.iter().map(|&(top, _)| bx.vertex(top).dist(w)).sum();
    let near_efgh: f64 = W_EDGES.iter().map(|&(_, bottom)| bx.vertex(bottom).dist(w)).sum();
    if near_abcd <= near_efgh {
        BottomFace::Abcd
    } else {
        BottomFace::Hgfe
    }
}

/// Bottom face selection. The slope rule is used for the canonical tangent
/// order it was designed for; swapped orders fall back to the vertical rule.
pub fn bottom_face(bx: &Box3D, cal: &CameraCalibration) -> BottomFace {
    if bx.order.is_canonical() {
        bottom_face_by_slope(bx)
    } else {
        bottom_face_by_vertical(bx, cal.w())
    }
}

/// Projects the bottom face onto the road plane.
pub fn bottom_quadrangle(bx: &Box3D, cal: &CameraCalibration, basis: &PlaneBasis) -> Result<Quadrangle, BoxError> {
    let face = bottom_face(bx, cal);
    let mut corners = [crate::geom::PlanePoint::default(); 4];
    for (slot, v) in corners.iter_mut().zip(face.vertices()) {
        *slot = cal.image_to_plane(bx.vertex(v), basis)?;
    }
    Ok(Quadrangle::new(corners))
}

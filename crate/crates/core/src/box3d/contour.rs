use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::BoxError;
use crate::geom::{signed_area, ImagePoint};

/// Binary raster, row-major, non-zero = foreground.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mask {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), width * height, "mask buffer size");
        Self { width, height, data }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![0; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.data[y as usize * self.width + x as usize] != 0
    }

    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.data[y * self.width + x] = u8::from(on);
    }
}

/// Closed polygon outlining a vehicle in the image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ImagePoint>", into = "Vec<ImagePoint>")]
pub struct Contour {
    points: Vec<ImagePoint>,
}

impl Contour {
    pub fn new(points: Vec<ImagePoint>) -> Result<Self, BoxError> {
        if points.len() < 3 {
            return Err(BoxError::ContourTooShort(points.len()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(BoxError::NonFinite);
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[ImagePoint] {
        &self.points
    }

    pub fn area(&self) -> f64 {
        let v: Vec<_> = self.points.iter().map(|p| p.vec()).collect();
        signed_area(&v).abs()
    }

    /// Removes vertices lying within `tol` pixels of the chord joining their
    /// neighbours. Never goes below three vertices.
    pub fn simplified(&self, tol: f64) -> Contour {
        let mut pts = self.points.clone();
        pts.dedup();
        while pts.len() > 3 && pts.first() == pts.last() {
            pts.pop();
        }
        let mut changed = true;
        while changed && pts.len() > 3 {
            changed = false;
            let mut i = 0;
            while i < pts.len() && pts.len() > 3 {
                let n = pts.len();
                let prev = pts[(i + n - 1) % n];
                let next = pts[(i + 1) % n];
                let off = match crate::geom::Line::through(prev, next) {
                    Some(line) => line.distance(pts[i]),
                    None => 0.0,
                };
                if off < tol {
                    pts.remove(i);
                    changed = true;
                } else {
                    i += 1;
                }
            }
        }
        Contour { points: pts }
    }
}

impl TryFrom<Vec<ImagePoint>> for Contour {
    type Error = BoxError;
    fn try_from(points: Vec<ImagePoint>) -> Result<Self, BoxError> {
        Contour::new(points)
    }
}

impl From<Contour> for Vec<ImagePoint> {
    fn from(c: Contour) -> Self {
        c.points
    }
}

// 8-neighbourhood, clockwise on screen (y down), starting east.
const NEIGHBOURS: [(i64, i64); 8] = [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

fn direction_of(dx: i64, dy: i64) -> usize {
    NEIGHBOURS.iter().position(|&d| d == (dx, dy)).expect("neighbouring pixel")
}

/// Outer border of the largest 8-connected foreground component.
///
/// Traced with Suzuki-Abe border following. Points are pixel centres in
/// the tracer's natural order, which runs counterclockwise on screen
/// (negative shoelace area in raw y-down coordinates).
pub fn extract_contour(mask: &Mask) -> Result<Contour, BoxError> {
    let component = largest_component(mask).ok_or(BoxError::EmptyMask)?;
    let (w, h) = (mask.width(), mask.height());
    let inside = |x: i64, y: i64| {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && component[y as usize * w + x as usize]
    };
    // first pixel of the component in raster order; its west neighbour is background
    let start_idx = component.iter().position(|&b| b).ok_or(BoxError::EmptyMask)?;
    let start = ((start_idx % w) as i64, (start_idx / w) as i64);

    // 3.1: clockwise from the west neighbour
    let west = direction_of(-1, 0);
    let first = (0..8)
        .map(|k| (west + k) % 8)
        .map(|d| (start.0 + NEIGHBOURS[d].0, start.1 + NEIGHBOURS[d].1))
        .find(|&(x, y)| inside(x, y));
    let Some(first) = first else {
        return Err(BoxError::ContourTooShort(1));
    };

    let mut border = Vec::new();
    let mut prev = first;
    let mut cur = start;
    loop {
        // 3.3: counterclockwise around `cur`, starting after `prev`
        let from = direction_of(prev.0 - cur.0, prev.1 - cur.1);
        let mut next = prev;
        for k in 1..=8 {
            let d = (from + 8 - k) % 8;
            let cand = (cur.0 + NEIGHBOURS[d].0, cur.1 + NEIGHBOURS[d].1);
            if inside(cand.0, cand.1) {
                next = cand;
                break;
            }
        }
        border.push(ImagePoint::new(cur.0 as f64, cur.1 as f64));
        // 3.5
        if next == start && cur == first {
            break;
        }
        prev = cur;
        cur = next;
    }
    Contour::new(border)
}

/// Boolean membership of the largest 8-connected component; ties go to the
/// component found first in raster order.
fn largest_component(mask: &Mask) -> Option<Vec<bool>> {
    let (w, h) = (mask.width(), mask.height());
    let mut label = vec![0u32; w * h];
    let mut best: Option<(u32, usize)> = None;
    let mut next_label = 0u32;
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as i64, y as i64) || label[y * w + x] != 0 {
                continue;
            }
            next_label += 1;
            let mut size = 0usize;
            label[y * w + x] = next_label;
            queue.push_back((x as i64, y as i64));
            while let Some((cx, cy)) = queue.pop_front() {
                size += 1;
                for (dx, dy) in NEIGHBOURS {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if mask.get(nx, ny) && label[ny as usize * w + nx as usize] == 0 {
                        label[ny as usize * w + nx as usize] = next_label;
                        queue.push_back((nx, ny));
                    }
                }
            }
            if best.is_none_or(|(_, s)| size > s) {
                best = Some((next_label, size));
            }
        }
    }
    best.map(|(l, _)| label.iter().map(|&x| x == l).collect())
}

use serde::{Deserialize, Serialize};

use super::DangerError;
use crate::box3d::Quadrangle;
use crate::geom::{polygon_contains, signed_area, PlanePoint};
use crate::kinematics::PredictionSnapshot;
use nalgebra::Vector2;

/// Axis-aligned raster on the road plane. Cell `(i, j)` spans
/// `origin + [i, i+1) x [j, j+1)` cells along `s` and `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: PlanePoint,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Smallest grid on the `cell` lattice covering every footprint widened
    /// by its margin.
    pub fn covering<'a>(items: impl IntoIterator<Item = (&'a Quadrangle, f64)>, cell: f64) -> Option<Self> {
        let mut lo = Vector2::repeat(f64::INFINITY);
        let mut hi = Vector2::repeat(f64::NEG_INFINITY);
        for (q, margin) in items {
            let (a, b) = q.bounds();
            lo = lo.inf(&(a.vec() - Vector2::repeat(margin)));
            hi = hi.sup(&(b.vec() + Vector2::repeat(margin)));
        }
        if !(lo.x.is_finite() && hi.x.is_finite() && cell > 0.0) {
            return None;
        }
        let i0 = (lo.x / cell).floor();
        let j0 = (lo.y / cell).floor();
        let i1 = (hi.x / cell).ceil();
        let j1 = (hi.y / cell).ceil();
        Some(Self {
            origin: PlanePoint::new(i0 * cell, j0 * cell),
            cell,
            nx: (i1 - i0).max(1.0) as usize,
            ny: (j1 - j0).max(1.0) as usize,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_center(&self, i: usize, j: usize) -> PlanePoint {
        PlanePoint::new(
            self.origin.s + (i as f64 + 0.5) * self.cell,
            self.origin.t + (j as f64 + 0.5) * self.cell,
        )
    }

    pub fn cell_area(&self) -> f64 {
        self.cell * self.cell
    }

    fn max_corner(&self) -> PlanePoint {
        PlanePoint::new(
            self.origin.s + self.nx as f64 * self.cell,
            self.origin.t + self.ny as f64 * self.cell,
        )
    }

    /// Cell index range `[lo, hi)` touched by `[a, b]` along one axis.
    fn span(&self, a: f64, b: f64, origin: f64, n: usize) -> (usize, usize) {
        let lo = ((a - origin) / self.cell).floor().max(0.0) as usize;
        let hi = (((b - origin) / self.cell).ceil().max(0.0) as usize).min(n);
        (lo.min(n), hi)
    }
}

/// Rectangular block of cells within a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub i0: usize,
    pub j0: usize,
    pub nx: usize,
    pub ny: usize,
}

/// Occupancy probability of one predicted vehicle. Only the block of cells
/// that can be non-zero is stored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatMap {
    pub grid: GridSpec,
    pub window: Window,
    /// Row-major over the window.
    pub cells: Vec<f64>,
    pub t_offset: f64,
    pub track_id: u64,
}

impl HeatMap {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let w = &self.window;
        if i < w.i0 || j < w.j0 || i >= w.i0 + w.nx || j >= w.j0 + w.ny {
            return 0.0;
        }
        self.cells[(j - w.j0) * w.nx + (i - w.i0)]
    }

    pub fn max(&self) -> f64 {
        self.cells.iter().copied().fold(0.0, f64::max)
    }

    /// Sum of cell values times cell area.
    pub fn mass(&self) -> f64 {
        self.cells.iter().sum::<f64>() * self.grid.cell_area()
    }
}

/// Area of `poly` inside the axis-aligned box `[lo, hi]`.
fn clipped_area(poly: &[Vector2<f64>], lo: Vector2<f64>, hi: Vector2<f64>) -> f64 {
    let mut pts: Vec<Vector2<f64>> = poly.to_vec();
    // (axis, bound, keep-below)
    for (axis, bound, below) in [(0, lo.x, false), (0, hi.x, true), (1, lo.y, false), (1, hi.y, true)] {
        if pts.is_empty() {
            break;
        }
        let inside = |p: &Vector2<f64>| if below { p[axis] <= bound } else { p[axis] >= bound };
        let mut out = Vec::with_capacity(pts.len() + 2);
        for k in 0..pts.len() {
            let cur = pts[k];
            let prev = pts[(k + pts.len() - 1) % pts.len()];
            let (ci, pi) = (inside(&cur), inside(&prev));
            if ci != pi {
                let u = (bound - prev[axis]) / (cur[axis] - prev[axis]);
                out.push(prev + (cur - prev) * u);
            }
            if ci {
                out.push(cur);
            }
        }
        pts = out;
    }
    if pts.len() < 3 {
        0.0
    } else {
        signed_area(&pts).abs()
    }
}

fn gaussian_kernel(sigma: f64, cell: f64) -> Vec<f64> {
    let r = (4.0 * sigma / cell).ceil() as i64;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| {
            let x = i as f64 * cell;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= sum);
    k
}

/// Heat map of one prediction snapshot on `grid`.
///
/// With zero variance the result is the footprint indicator sampled at cell
/// centres. Otherwise each cell's covered area fraction is convolved with a
/// sampled Gaussian kernel (truncated at 4 sigma, renormalized), which
/// approximates the probability that the cell centre is covered when the
/// footprint centre is Gaussian.
pub fn vehicle_heatmap(track_id: u64, snap: &PredictionSnapshot, grid: &GridSpec) -> Result<HeatMap, DangerError> {
    let sigma = snap.variance.max(0.0).sqrt();
    let (lo, hi) = snap.footprint.bounds();
    let reach = 4.0 * sigma;
    let gmax = grid.max_corner();
    if lo.s - reach < grid.origin.s || lo.t - reach < grid.origin.t || hi.s + reach > gmax.s || hi.t + reach > gmax.t {
        return Err(DangerError::GridTooSmall);
    }
    let poly = snap.footprint.as_vecs();
    let (fi0, fi1) = grid.span(lo.s, hi.s, grid.origin.s, grid.nx);
    let (fj0, fj1) = grid.span(lo.t, hi.t, grid.origin.t, grid.ny);

    if sigma == 0.0 {
        let window = Window { i0: fi0, j0: fj0, nx: fi1 - fi0, ny: fj1 - fj0 };
        let mut cells = vec![0.0; window.nx * window.ny];
        for j in fj0..fj1 {
            for i in fi0..fi1 {
                if polygon_contains(&poly, grid.cell_center(i, j).vec()) {
                    cells[(j - fj0) * window.nx + (i - fi0)] = 1.0;
                }
            }
        }
        return Ok(HeatMap { grid: *grid, window, cells, t_offset: snap.t_offset, track_id });
    }

    let kernel = gaussian_kernel(sigma, grid.cell);
    let r = kernel.len() / 2;
    let i0 = fi0.saturating_sub(r);
    let j0 = fj0.saturating_sub(r);
    let i1 = (fi1 + r).min(grid.nx);
    let j1 = (fj1 + r).min(grid.ny);
    let window = Window { i0, j0, nx: i1 - i0, ny: j1 - j0 };
    let (wx, wy) = (window.nx, window.ny);

    let inv_area = 1.0 / grid.cell_area();
    let mut cover = vec![0.0; wx * wy];
    for j in fj0..fj1 {
        for i in fi0..fi1 {
            let c_lo = Vector2::new(grid.origin.s + i as f64 * grid.cell, grid.origin.t + j as f64 * grid.cell);
            let c_hi = c_lo + Vector2::repeat(grid.cell);
            cover[(j - j0) * wx + (i - i0)] = (clipped_area(&poly, c_lo, c_hi) * inv_area).min(1.0);
        }
    }

    // separable convolution: along s, then along t
    let mut tmp = vec![0.0; wx * wy];
    for j in 0..wy {
        for i in 0..wx {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let src = i as i64 + k as i64 - r as i64;
                if src >= 0 && (src as usize) < wx {
                    acc += w * cover[j * wx + src as usize];
                }
            }
            tmp[j * wx + i] = acc;
        }
    }
    let mut cells = vec![0.0; wx * wy];
    for j in 0..wy {
        for i in 0..wx {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                let src = j as i64 + k as i64 - r as i64;
                if src >= 0 && (src as usize) < wy {
                    acc += w * tmp[src as usize * wx + i];
                }
            }
            cells[j * wx + i] = acc.clamp(0.0, 1.0);
        }
    }
    Ok(HeatMap { grid: *grid, window, cells, t_offset: snap.t_offset, track_id })
}

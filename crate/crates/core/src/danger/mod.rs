//! Danger recognition: pairwise footprint distances and danger maps built
//! from predicted occupancy.

mod distance;
mod grid;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use distance::{point_edge_distance, proximity_alerts, quad_distance, quads_touch, segments_intersect, ProximityAlert};
pub use grid::{vehicle_heatmap, GridSpec, HeatMap, Window};

/// Default alert threshold in meters.
pub const DEFAULT_ALERT_THRESHOLD_M: f64 = 2.0;

/// Default grid cell size in meters.
pub const DEFAULT_GRID_CELL_M: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DangerError {
    #[error("grid does not cover the footprint plus 4 sigma")]
    GridTooSmall,
    #[error("heat maps differ in grid geometry or time offset")]
    GridMismatch,
    #[error("danger map needs at least one heat map")]
    NoHeatMaps,
}

/// Probability that two or more vehicles occupy each cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DangerMap {
    pub grid: GridSpec,
    pub t_offset: f64,
    /// Row-major, `ny` rows of `nx` cells.
    pub cells: Vec<f64>,
}

/// Sidecar describing an exported raster.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RasterSidecar {
    pub origin: [f64; 2],
    pub cell: f64,
    pub width: usize,
    pub height: usize,
    pub t_offset: f64,
    /// Plane axis increasing along raster rows.
    pub row_axis: String,
    pub max: f64,
}

impl DangerMap {
    pub fn empty(grid: GridSpec, t_offset: f64) -> Self {
        Self { grid, t_offset, cells: vec![0.0; grid.len()] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[j * self.grid.nx + i]
    }

    pub fn max(&self) -> f64 {
        self.cells.iter().copied().fold(0.0, f64::max)
    }

    /// Binary PGM (P5), one byte per cell, `round(255 p)`. Row `r` holds
    /// cells with `j = r`.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.grid.nx, self.grid.ny).into_bytes();
        out.extend(self.cells.iter().map(|&p| (255.0 * p.clamp(0.0, 1.0)).round() as u8));
        out
    }

    pub fn sidecar(&self) -> RasterSidecar {
        RasterSidecar {
            origin: [self.grid.origin.s, self.grid.origin.t],
            cell: self.grid.cell,
            width: self.grid.nx,
            height: self.grid.ny,
            t_offset: self.t_offset,
            row_axis: "t".into(),
            max: self.max(),
        }
    }
}

/// Combines per-vehicle heat maps, treating vehicles as independent.
///
/// Per cell the fold keeps the probabilities of zero, exactly one, and two
/// or more occupants; the last is the result.
pub fn danger_map(heatmaps: &[HeatMap]) -> Result<DangerMap, DangerError> {
    let first = heatmaps.first().ok_or(DangerError::NoHeatMaps)?;
    if heatmaps.iter().any(|h| h.grid != first.grid || h.t_offset != first.t_offset) {
        return Err(DangerError::GridMismatch);
    }
    let grid = first.grid;
    let mut p0 = vec![1.0; grid.len()];
    let mut p1 = vec![0.0; grid.len()];
    let mut p2 = vec![0.0; grid.len()];
    for h in heatmaps {
        let w = h.window;
        for j in w.j0..w.j0 + w.ny {
            for i in w.i0..w.i0 + w.nx {
                let p = h.get(i, j);
                let k = j * grid.nx + i;
                p2[k] += p1[k] * p;
                p1[k] = p1[k] * (1.0 - p) + p0[k] * p;
                p0[k] *= 1.0 - p;
            }
        }
    }
    p2.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
    Ok(DangerMap { grid, t_offset: first.t_offset, cells: p2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::PlanePoint;

    fn grid1() -> GridSpec {
        GridSpec { origin: PlanePoint::new(0.0, 0.0), cell: 1.0, nx: 1, ny: 1 }
    }

    fn single(p: f64, id: u64) -> HeatMap {
        HeatMap {
            grid: grid1(),
            window: Window { i0: 0, j0: 0, nx: 1, ny: 1 },
            cells: vec![p],
            t_offset: 0.12,
            track_id: id,
        }
    }

    #[test]
    fn single_map_is_zero() {
        let d = danger_map(&[single(0.7, 1)]).unwrap();
        assert_eq!(d.cells, vec![0.0]);
    }

    #[test]
    fn three_halves() {
        let d = danger_map(&[single(0.5, 1), single(0.5, 2), single(0.5, 3)]).unwrap();
        assert!((d.cells[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn deterministic_overlap_is_one() {
        let d = danger_map(&[single(1.0, 1), single(1.0, 2)]).unwrap();
        assert_eq!(d.cells, vec![1.0]);
        let d = danger_map(&[single(1.0, 1), single(0.0, 2)]).unwrap();
        assert_eq!(d.cells, vec![0.0]);
    }

    #[test]
    fn mismatch_and_empty() {
        let mut b = single(0.5, 2);
        b.t_offset = 0.24;
        assert_eq!(danger_map(&[single(0.5, 1), b]), Err(DangerError::GridMismatch));
        assert_eq!(danger_map(&[]), Err(DangerError::NoHeatMaps));
    }

    #[test]
    fn pgm_layout() {
        let g = GridSpec { origin: PlanePoint::new(0.0, 0.0), cell: 1.0, nx: 2, ny: 1 };
        let m = DangerMap { grid: g, t_offset: 0.12, cells: vec![0.0, 0.5] };
        let bytes = m.to_pgm();
        assert!(bytes.starts_with(b"P5\n2 1\n255\n"));
        assert_eq!(&bytes[bytes.len() - 2..], &[0, 128]);
    }
}

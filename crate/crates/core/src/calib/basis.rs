use nalgebra::{Matrix3, Vector3};

use super::CameraCalibration;
use crate::geom::{PlanePoint, WorldPoint};

/// Rotation that makes the road plane axis-aligned.
///
/// Rows are the unit cross-road direction, the unit plane normal and the unit
/// traffic direction. `alpha`, `beta`, `gamma` decompose it as
/// `Rx(alpha) * Ry(beta) * Rz(gamma)` with
///
/// ```text
/// Rx = [1 0 0; 0 ca sa; 0 -sa ca]
/// Ry = [cb 0 -sb; 0 1 0; sb 0 cb]
/// Rz = [cg sg 0; -sg cg 0; 0 0 1]
/// ```
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneBasis {
    pub r: Matrix3<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl PlaneBasis {
    pub fn from_calibration(cal: &CameraCalibration) -> Self {
        let v_hat = cal.dir_v().normalize();
        let u_hat = cal.dir_u().normalize();
        let mut w_hat = cal.dir_w().normalize();
        // keep the frame right-handed; the normal's sign is arbitrary
        if v_hat.dot(&w_hat.cross(&u_hat)) < 0.0 {
            w_hat = -w_hat;
        }
        Self::from_rows(v_hat, w_hat, u_hat)
    }

    fn from_rows(v_hat: Vector3<f64>, w_hat: Vector3<f64>, u_hat: Vector3<f64>) -> Self {
        let r = Matrix3::from_rows(&[v_hat.transpose(), w_hat.transpose(), u_hat.transpose()]);
        let (alpha, beta, gamma) = decompose(&r);
        Self { r, alpha, beta, gamma }
    }

    pub fn v_hat(&self) -> Vector3<f64> {
        self.r.row(0).transpose()
    }

    pub fn w_hat(&self) -> Vector3<f64> {
        self.r.row(1).transpose()
    }

    pub fn u_hat(&self) -> Vector3<f64> {
        self.r.row(2).transpose()
    }

    /// Rotates `p` and drops the component along the plane normal.
    pub fn to_plane_coords(&self, p: &WorldPoint) -> PlanePoint {
        let q = self.r * p.coords;
        PlanePoint::new(q.x, q.z)
    }

    /// Rebuilds the rotation from the Euler angles.
    pub fn recompose(&self) -> Matrix3<f64> {
        compose(self.alpha, self.beta, self.gamma)
    }
}

pub(crate) fn compose(alpha: f64, beta: f64, gamma: f64) -> Matrix3<f64> {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, ca, sa, 0.0, -sa, ca);
    let ry = Matrix3::new(cb, 0.0, -sb, 0.0, 1.0, 0.0, sb, 0.0, cb);
    let rz = Matrix3::new(cg, sg, 0.0, -sg, cg, 0.0, 0.0, 0.0, 1.0);
    rx * ry * rz
}

// Product Rx*Ry*Rz:
//   row0 = [cb cg, cb sg, -sb]
//   row1 = [-ca sg + sa sb cg, ca cg + sa sb sg, sa cb]
//   row2 = [sa sg + ca sb cg, -sa cg + ca sb sg, ca cb]
fn decompose(r: &Matrix3<f64>) -> (f64, f64, f64) {
    let sb = (-r[(0, 2)]).clamp(-1.0, 1.0);
    let beta = sb.asin();
    let cb = beta.cos();
    if cb.abs() > 1e-9 {
        let alpha = r[(1, 2)].atan2(r[(2, 2)]);
        let gamma = r[(0, 1)].atan2(r[(0, 0)]);
        (alpha, beta, gamma)
    } else {
        // gimbal lock: gamma is not separable from alpha, pin it to zero
        let alpha = (r[(1, 0)] * sb).atan2(r[(1, 1)]);
        (alpha, beta, 0.0)
    }
}

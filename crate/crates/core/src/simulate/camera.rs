use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::calib::{CameraCalibration, PlaneBasis, DEFAULT_PLANE_OFFSET};
use crate::geom::{ImagePoint, PlanePoint, WorldPoint};

fn default_offset() -> f64 {
    DEFAULT_PLANE_OFFSET
}

/// Pinhole camera above a flat road.
///
/// The road runs at `pan_deg` to the optical axis (seen from above), the
/// camera looks down by `pitch_deg` and is rolled by `roll_deg`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub image_size: [u32; 2],
    /// Focal length, pixels.
    pub focal: f64,
    /// Defaults to the image centre.
    #[serde(default)]
    pub principal_point: Option<ImagePoint>,
    pub pitch_deg: f64,
    pub pan_deg: f64,
    #[serde(default)]
    pub roll_deg: f64,
    pub height_m: f64,
    pub fps: f64,
    #[serde(default = "default_offset")]
    pub d: f64,
}

/// A camera with its road frame resolved in camera coordinates
/// (x right, y down, z forward).
#[derive(Clone, Debug)]
pub struct SimCamera {
    pub spec: CameraSpec,
    pub c: ImagePoint,
    /// Unit vectors of the road frame.
    pub along: Vector3<f64>,
    pub lateral: Vector3<f64>,
    pub down: Vector3<f64>,
    calib: CameraCalibration,
    basis: PlaneBasis,
    /// `+1` when the calibration's plane lies in front of the camera centre.
    sign: f64,
    /// Meters per plane unit.
    lambda: f64,
}

impl SimCamera {
    pub fn new(spec: CameraSpec) -> Result<Self, SimError> {
        let bad = |m: &str| Err(SimError::Config(m.to_string()));
        if !(spec.focal > 0.0 && spec.height_m > 0.0 && spec.fps > 0.0) {
            return bad("focal, height_m and fps must be positive");
        }
        if spec.image_size[0] == 0 || spec.image_size[1] == 0 {
            return bad("image_size must be positive");
        }
        if !(spec.pitch_deg > 0.0 && spec.pitch_deg < 90.0) {
            return bad("pitch_deg must lie in (0, 90)");
        }
        let c = spec.principal_point.unwrap_or(ImagePoint::new(
            f64::from(spec.image_size[0]) / 2.0,
            f64::from(spec.image_size[1]) / 2.0,
        ));
        let (pitch, pan, roll) = (spec.pitch_deg.to_radians(), spec.pan_deg.to_radians(), spec.roll_deg.to_radians());
        let tilt = |v: Vector3<f64>| {
            let (s, co) = pitch.sin_cos();
            let p = Vector3::new(v.x, v.y * co - v.z * s, v.y * s + v.z * co);
            let (s, co) = roll.sin_cos();
            Vector3::new(p.x * co - p.y * s, p.x * s + p.y * co, p.z)
        };
        let along = tilt(Vector3::new(pan.sin(), 0.0, pan.cos()));
        let lateral = tilt(Vector3::new(pan.cos(), 0.0, -pan.sin()));
        let down = tilt(Vector3::new(0.0, 1.0, 0.0));
        if along.z.abs() < 1e-6 || lateral.z.abs() < 1e-6 {
            return bad("road directions parallel to the image plane have no finite vanishing point");
        }
        let vp = |d: Vector3<f64>| ImagePoint::new(c.x + spec.focal * d.x / d.z, c.y + spec.focal * d.y / d.z);
        let calib = CameraCalibration::derive(vp(along), vp(lateral), c, spec.d, 1.0)
            .map_err(|e| SimError::Config(format!("camera does not calibrate: {e}")))?;
        let n = Vector3::new(calib.plane().x, calib.plane().y, calib.plane().z);
        let off = n.dot(&calib.center().coords) + spec.d;
        if off == 0.0 {
            return bad("plane offset places the road plane through the camera centre");
        }
        let lambda = spec.height_m / off.abs();
        let calib = calib.with_lambda(lambda).expect("positive scale");
        let basis = calib.plane_basis();
        Ok(Self { spec, c, along, lateral, down, calib, basis, sign: -off.signum(), lambda })
    }

    pub fn calibration(&self) -> &CameraCalibration {
        &self.calib
    }

    pub fn basis(&self) -> &PlaneBasis {
        &self.basis
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn true_w(&self) -> ImagePoint {
        self.vanishing(self.down)
    }

    fn vanishing(&self, d: Vector3<f64>) -> ImagePoint {
        ImagePoint::new(self.c.x + self.spec.focal * d.x / d.z, self.c.y + self.spec.focal * d.y / d.z)
    }

    /// Camera-frame position of a road-frame point `(lateral, along, up)` in
    /// meters.
    pub fn to_camera(&self, lateral: f64, along: f64, up: f64) -> Vector3<f64> {
        self.lateral * lateral + self.along * along + self.down * (self.spec.height_m - up)
    }

    /// Pixel of a camera-frame point.
    pub fn project(&self, x: &Vector3<f64>) -> Result<ImagePoint, SimError> {
        if !(x.z > 1e-9) {
            return Err(SimError::BehindCamera);
        }
        Ok(ImagePoint::new(self.c.x + self.spec.focal * x.x / x.z, self.c.y + self.spec.focal * x.y / x.z))
    }

    pub fn in_image(&self, p: ImagePoint) -> bool {
        p.x >= 0.0
            && p.y >= 0.0
            && p.x <= f64::from(self.spec.image_size[0])
            && p.y <= f64::from(self.spec.image_size[1])
    }

    /// Road point in the calibration's world frame.
    pub fn road_to_world(&self, lateral: f64, along: f64) -> WorldPoint {
        let x = self.to_camera(lateral, along, 0.0);
        self.calib.center() + x * (self.sign / self.lambda)
    }

    /// Road point in plane coordinates.
    pub fn road_to_plane(&self, lateral: f64, along: f64) -> PlanePoint {
        self.basis.to_plane_coords(&self.road_to_world(lateral, along))
    }

    /// Road-frame velocity (m/s) as a plane velocity (plane units/s).
    pub fn velocity_to_plane(&self, v: Vector2<f64>) -> Vector2<f64> {
        self.road_to_plane(v.x, v.y) - self.road_to_plane(0.0, 0.0)
    }
}

/// Pixel of a calibration-frame point: the ray model inverted.
///
/// The calibration places its road plane at an arbitrary offset, which
/// often puts it on the far side of the projection centre; the projection
/// is therefore taken along the full line through `C`.
pub fn forward_project(p: &WorldPoint, calib: &CameraCalibration) -> Result<ImagePoint, SimError> {
    let g = p - calib.center();
    if g.z.abs() <= 1e-12 * g.norm() || g.norm() == 0.0 {
        return Err(SimError::BehindCamera);
    }
    let c = calib.c();
    let f = calib.focal();
    Ok(ImagePoint::new(c.x + f * g.x / g.z, c.y + f * g.y / g.z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> CameraSpec {
        CameraSpec {
            image_size: [1920, 1080],
            focal: 1400.0,
            principal_point: None,
            pitch_deg: 15.0,
            pan_deg: 25.0,
            roll_deg: 2.0,
            height_m: 8.0,
            fps: 25.0,
            d: 10.0,
        }
    }

    #[test]
    fn road_frame_is_orthonormal() {
        let cam = SimCamera::new(spec()).unwrap();
        for (a, b) in [(cam.along, cam.lateral), (cam.along, cam.down), (cam.lateral, cam.down)] {
            assert!(a.dot(&b).abs() < 1e-12);
        }
        assert!((cam.true_w().dist(cam.calibration().w())) < 1e-6);
    }

    #[test]
    fn road_points_land_on_plane_and_reproject() {
        let cam = SimCamera::new(spec()).unwrap();
        let cal = cam.calibration();
        for (l, a) in [(-3.0, 20.0), (4.0, 35.0), (0.5, 60.0)] {
            let p = cam.road_to_world(l, a);
            assert!(cal.plane_residual(&p).abs() < 1e-9);
            let px = cam.project(&cam.to_camera(l, a, 0.0)).unwrap();
            let back = forward_project(&p, cal).unwrap();
            assert!(px.dist(back) < 1e-9);
            let q = cal.project_to_plane(px).unwrap();
            assert!((q - p).norm() < 1e-9 * p.coords.norm());
        }
    }

    #[test]
    fn plane_distances_scale_to_meters() {
        let cam = SimCamera::new(spec()).unwrap();
        let a = cam.road_to_plane(1.0, 20.0);
        let b = cam.road_to_plane(4.0, 24.0);
        assert!((cam.lambda() * a.dist(b) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn optical_axis_maps_to_principal_point() {
        let cam = SimCamera::new(spec()).unwrap();
        let cal = cam.calibration();
        let p = cal.center() + Vector3::new(0.0, 0.0, -7.0);
        assert!(forward_project(&p, cal).unwrap().dist(cal.c()) < 1e-12);
        let side = cal.center() + Vector3::new(1.0, 0.0, 0.0);
        assert_eq!(forward_project(&side, cal), Err(SimError::BehindCamera));
    }

    #[test]
    fn rejects_level_camera() {
        let s = CameraSpec { pitch_deg: 0.0, ..spec() };
        assert!(SimCamera::new(s).is_err());
        let s = CameraSpec { pan_deg: 0.0, ..spec() };
        assert!(SimCamera::new(s).is_err());
    }
}

//! Detector-agnostic traffic danger recognition.
//!
//! The crate turns per-frame vehicle detections from a calibrated
//! surveillance camera into road-plane kinematics and danger signals:
//!
//! * [`calib`] derives the camera and road plane from two vanishing points
//!   and maps pixels onto the plane.
//! * [`box3d`] builds a 3D bounding box from a vehicle contour using tangent
//!   lines through the three vanishing points, and extracts its footprint.
//! * [`kinematics`] tracks footprint centers, smooths speeds and predicts
//!   future snapshots.
//! * [`danger`] computes pairwise footprint distances, per-vehicle heat maps
//!   and multi-vehicle danger maps.
//! * [`pipeline`] filters detections, assigns track IDs and runs the above
//!   per frame.
//! * [`simulate`] renders synthetic cuboid traffic with exact ground truth.
//! * [`eval`] scores pipeline output against ground truth.

pub mod assignment;
pub mod box3d;
pub mod calib;
pub mod danger;
pub mod eval;
pub mod geom;
pub mod kinematics;
pub mod pipeline;
pub mod simulate;

pub use geom::{ImagePoint, PlanePoint, WorldPoint};

//! Points, directions and camera poses.
//!
//! Camera frames use the robotics convention: local +X is the optical axis,
//! +Y points left and +Z points up.

use nalgebra::{Matrix3, Rotation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

pub type Point3 = nalgebra::Point3<f64>;
pub type Vector3 = nalgebra::Vector3<f64>;

/// Position plus orientation of the camera optical frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub position: Point3,
    pub orientation: UnitQuaternion<f64>,
}

impl CameraPose {
    pub fn new(position: Point3, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    /// Pose at `position` whose optical axis points along `forward`.
    ///
    /// World +Z is used as the up hint; when `forward` is (anti)parallel to
    /// it, world +Y is used instead.
    pub fn looking_along(position: Point3, forward: &Vector3) -> Self {
        let x = forward.normalize();
        let hint = if x.z.abs() > 0.999 {
            Vector3::y()
        } else {
            Vector3::z()
        };
        let y = hint.cross(&x).normalize();
        let z = x.cross(&y);
        let rot = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[x, y, z]));
        Self::new(position, UnitQuaternion::from_rotation_matrix(&rot))
    }

    /// Pose at `position` looking at `target`.
    pub fn looking_at(position: Point3, target: &Point3) -> Self {
        Self::looking_along(position, &(target - position))
    }

    pub fn forward(&self) -> Vector3 {
        self.orientation * Vector3::x()
    }

    pub fn left(&self) -> Vector3 {
        self.orientation * Vector3::y()
    }

    pub fn up(&self) -> Vector3 {
        self.orientation * Vector3::z()
    }

    pub fn distance_to(&self, other: &CameraPose) -> f64 {
        (self.position - other.position).norm()
    }
}

/// Angle between two (not necessarily unit) vectors, in radians.
pub fn angle_between(a: &Vector3, b: &Vector3) -> f64 {
    let c = a.dot(b) / (a.norm() * b.norm());
    c.clamp(-1.0, 1.0).acos()
}

/// Lexicographic total order on points, used for deterministic tie breaks.
pub fn lex_cmp(a: &Point3, b: &Point3) -> std::cmp::Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.z.total_cmp(&b.z))
}

/// An orthonormal basis `(u, v)` spanning the plane orthogonal to `dir`.
///
/// `u` is horizontal (orthogonal to world up) whenever that is defined.
pub fn plane_basis(dir: &Vector3) -> (Vector3, Vector3) {
    let pose = CameraPose::looking_along(Point3::origin(), dir);
    (pose.left(), pose.up())
}

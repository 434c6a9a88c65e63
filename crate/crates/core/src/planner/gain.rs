//! Information gain by ray marching through the candidate's frustum.
//!
//! Each ray walks the exact voxel sequence from the camera and stops at the
//! first occupied voxel, at the sensor's max range, or where it leaves the
//! region of interest.

use std::ops::ControlFlow;

use crate::geometry::{CameraPose, Point3, Vector3};
use crate::map::{OccupancyState, SemanticOctree};
use crate::scene::CameraModel;

/// Per-ray terms: unknown voxel count and summed semantic uncertainty
/// `1 - c` over occupied voxels reached.
///
/// Occupied voxels without a label use the map's background confidence.
pub fn ray_terms(map: &SemanticOctree, origin: &Point3, dir: &Vector3, max_range: f64) -> (u32, f64) {
    let mut unknown = 0u32;
    let mut semantic = 0.0;
    let bg = map.params().background_confidence;
    map.bounds().walk_ray(origin, dir, max_range, |key, _, _| {
        match map.state_unchecked(key) {
            OccupancyState::Unknown => {
                unknown += 1;
                ControlFlow::Continue(())
            }
            OccupancyState::Free => ControlFlow::Continue(()),
            OccupancyState::Occupied => {
                let c = map.voxel_unchecked(key).label.map_or(bg, |l| l.confidence);
                semantic += 1.0 - c;
                ControlFlow::Break(())
            }
        }
    });
    (unknown, semantic)
}

/// Mean unknown-voxel count over a `rows × cols` ray grid.
pub fn volumetric_gain(
    pose: &CameraPose,
    map: &SemanticOctree,
    camera: &CameraModel,
    rows: usize,
    cols: usize,
) -> f64 {
    let dirs = camera.ray_directions(pose, rows, cols);
    let mut total = 0.0;
    for d in &dirs {
        total += ray_terms(map, &pose.position, d, camera.max_range).0 as f64;
    }
    total / dirs.len() as f64
}

/// Mean of `(1 - beta) * U_r + beta * S_r` over the ray grid.
pub fn semantic_gain(
    pose: &CameraPose,
    map: &SemanticOctree,
    camera: &CameraModel,
    rows: usize,
    cols: usize,
    beta: f64,
) -> f64 {
    let dirs = camera.ray_directions(pose, rows, cols);
    let mut total = 0.0;
    for d in &dirs {
        let (u, s) = ray_terms(map, &pose.position, d, camera.max_range);
        total += (1.0 - beta) * u as f64 + beta * s;
    }
    total / dirs.len() as f64
}

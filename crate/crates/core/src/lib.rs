//! Confidence-aware semantic occupancy mapping and viewpoint planning for
//! active inspection of tree canopies.
//!
//! The crate is organized bottom-up:
//!
//! - [`map`]: bounded voxel map with log-odds occupancy, label fusion and
//!   exact ray traversal.
//! - [`scene`]: procedural symptomatic trees and a simulated semantic depth
//!   camera.
//! - [`planner`]: baseline grid, volumetric NBV and semantic NBV planners and
//!   the closed perception/action loop.
//! - [`eval`]: cluster extraction, radius matching and run aggregation.
//! - [`experiment`]: seeded multi-run comparisons with CSV output.

// `!(x > 0.0)` also rejects NaN, which is the point.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod geometry;
mod io_util;
pub mod map;
pub mod planner;
pub mod rng;
pub mod scene;

pub use error::{Error, Result};
pub use geometry::{CameraPose, Point3, Vector3};
pub use map::{
    ClassId, FusionParams, InsertStats, OccupancyState, RoiBounds, SemanticLabel, SemanticOctree,
    SemanticPoint, SemanticVoxel, VoxelKey,
};

//! Precomputed reachable-workspace voxel grid.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Viewpoint;
use crate::error::{Error, Result};
use crate::geometry::{Point3, Vector3};
use crate::map::RoiBounds;
use crate::rng::SimRng;

/// Source of sampled end-effector positions.
pub trait KinematicSampler {
    /// Axis-aligned box containing every position the sampler can return.
    fn extent(&self) -> (Point3, Point3);
    fn sample(&self, rng: &mut SimRng) -> Point3;
}

/// Positions uniform in volume between two spheres around a base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalShell {
    pub center: Point3,
    pub inner: f64,
    pub outer: f64,
}

impl SphericalShell {
    pub fn contains(&self, p: &Point3) -> bool {
        let r = (p - self.center).norm();
        r >= self.inner && r <= self.outer
    }
}

impl KinematicSampler for SphericalShell {
    fn extent(&self) -> (Point3, Point3) {
        let e = Vector3::repeat(self.outer);
        (self.center - e, self.center + e)
    }

    fn sample(&self, rng: &mut SimRng) -> Point3 {
        let (a, b) = (self.inner.powi(3), self.outer.powi(3));
        let r = rng.random_range(a..=b).cbrt();
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        let s = (1.0 - z * z).sqrt();
        self.center + Vector3::new(s * phi.cos(), s * phi.sin(), z) * r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorkspaceConfig {
    /// Arm base, in the robot frame.
    pub base: Point3,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub samples: usize,
    pub resolution: f64,
    pub seed: u64,
}

impl Default for WorkspaceConfig {
    fn default() -> Self {
        Self {
            base: Point3::new(0.0, 0.0, 0.6),
            inner_radius: 0.2,
            outer_radius: 1.0,
            samples: 1_000_000,
            resolution: 0.04,
            seed: 0,
        }
    }
}

impl WorkspaceConfig {
    pub fn shell(&self) -> SphericalShell {
        SphericalShell {
            center: self.base,
            inner: self.inner_radius,
            outer: self.outer_radius,
        }
    }

    pub fn build(&self) -> Result<ReachabilityGrid> {
        let mut rng = crate::rng::rng_from_seed(self.seed);
        build_reachability(self.samples, &self.shell(), self.resolution, &mut rng)
    }
}

/// Binary reachability flags over a voxel grid.
#[derive(Debug, Clone)]
pub struct ReachabilityGrid {
    bounds: RoiBounds,
    cells: Vec<bool>,
}

impl ReachabilityGrid {
    pub fn new(bounds: RoiBounds, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != bounds.total_voxels() {
            return Err(Error::Config("reachability cell count mismatch".into()));
        }
        Ok(Self { bounds, cells })
    }

    /// Grid over `bounds` with every cell set to `value`.
    pub fn uniform(bounds: RoiBounds, value: bool) -> Self {
        Self {
            cells: vec![value; bounds.total_voxels()],
            bounds,
        }
    }

    pub fn bounds(&self) -> &RoiBounds {
        &self.bounds
    }

    pub fn reachable_cells(&self) -> usize {
        self.cells.iter().filter(|c| **c).count()
    }

    /// False for anything outside the grid.
    pub fn is_reachable(&self, p: &Point3) -> bool {
        self.bounds
            .key_of(p)
            .is_some_and(|k| self.cells[self.bounds.linear_index(k)])
    }
}

pub fn build_reachability(
    sample_count: usize,
    sampler: &dyn KinematicSampler,
    resolution: f64,
    rng: &mut SimRng,
) -> Result<ReachabilityGrid> {
    if sample_count == 0 {
        return Err(Error::Config("reachability needs at least one sample".into()));
    }
    let (lo, hi) = sampler.extent();
    let bounds = RoiBounds::new(lo, hi, resolution)?;
    let mut cells = vec![false; bounds.total_voxels()];
    for _ in 0..sample_count {
        let p = sampler.sample(rng);
        if let Some(k) = bounds.key_of(&p) {
            cells[bounds.linear_index(k)] = true;
        }
    }
    Ok(ReachabilityGrid { bounds, cells })
}

/// Keep the candidates whose position falls in a reachable cell, in order.
pub fn filter_feasible(candidates: Vec<Viewpoint>, grid: &ReachabilityGrid) -> Vec<Viewpoint> {
    candidates
        .into_iter()
        .filter(|v| grid.is_reachable(&v.pose.position))
        .collect()
}

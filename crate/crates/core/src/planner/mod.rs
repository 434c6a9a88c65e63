//! Viewpoint planning: baseline midplane grid, volumetric NBV and semantic NBV.

mod baseline;
mod cluster;
mod episode;
mod gain;
mod reachability;
mod sampling;
mod select;

use serde::{Deserialize, Serialize};

pub use baseline::{baseline_grid, footprint, grid_spacing};
pub use cluster::{cluster_voxels, VoxelCluster};
pub use episode::{run_episode, EpisodeOutcome, EpisodeSetup, MotionModel, StopReason};
pub use gain::{ray_terms, semantic_gain, volumetric_gain};
pub use reachability::{
    build_reachability, filter_feasible, KinematicSampler, ReachabilityGrid, SphericalShell,
    WorkspaceConfig,
};
pub use sampling::{hemisphere_sample, perturbed_grid};
pub use select::{generate_candidates, select_next_view, NbvMode};

use crate::error::{Error, Result};
use crate::geometry::{CameraPose, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlannerMode {
    Baseline,
    Volumetric,
    Semantic,
}

impl PlannerMode {
    pub const ALL: [PlannerMode; 3] = [Self::Baseline, Self::Volumetric, Self::Semantic];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Baseline => "baseline",
            Self::Volumetric => "volumetric",
            Self::Semantic => "semantic",
        }
    }
}

impl std::fmt::Display for PlannerMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PlannerMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Self::Baseline),
            "volumetric" => Ok(Self::Volumetric),
            "semantic" => Ok(Self::Semantic),
            other => Err(Error::Config(format!("unknown planner mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewpointSource {
    Grid,
    GridPerturbed,
    FrontierCluster,
    SemanticCluster,
}

/// Candidate camera pose with its scoring bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewpoint {
    pub pose: CameraPose,
    pub source: ViewpointSource,
    pub gain: f64,
    pub cost: f64,
    /// `gain - alpha * cost` once scored.
    pub utility: f64,
}

impl Viewpoint {
    pub fn new(pose: CameraPose, source: ViewpointSource) -> Self {
        Self {
            pose,
            source,
            gain: 0.0,
            cost: 0.0,
            utility: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    /// Weight on motion cost in the utility.
    pub alpha: f64,
    /// Blend between volumetric and semantic uncertainty.
    pub beta: f64,
    /// Confidence below which labelled voxels attract the semantic planner.
    pub tau_c: f64,
    pub overlap: f64,
    /// Nominal camera distance to the inspected surface, metres.
    pub stand_off: f64,
    pub cluster_cap: usize,
    pub hemisphere_samples: usize,
    pub radial_range: [f64; 2],
    pub ig_ray_rows: usize,
    pub ig_ray_cols: usize,
    pub perturbations_per_view: usize,
    pub perturbation_cone_deg: f64,
    pub kmeans_max_iter: usize,
    /// Primary viewing direction of the baseline grid.
    pub view_direction: Vector3,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        let stand_off = 0.55;
        Self {
            alpha: 0.1,
            beta: 0.7,
            tau_c: 0.6,
            overlap: 0.2,
            stand_off,
            cluster_cap: 100,
            hemisphere_samples: 8,
            radial_range: [0.7 * stand_off, 1.2 * stand_off],
            ig_ray_rows: 18,
            ig_ray_cols: 24,
            perturbations_per_view: 3,
            perturbation_cone_deg: 15.0,
            kmeans_max_iter: 50,
            view_direction: Vector3::x(),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha must be >= 0");
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return bad("beta must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.tau_c) {
            return bad("tau_c must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return bad("overlap must lie in [0, 1)");
        }
        if !(self.stand_off > 0.0) {
            return bad("stand_off must be positive");
        }
        let [lo, hi] = self.radial_range;
        if !(lo > 0.0 && lo <= self.stand_off && self.stand_off <= hi) {
            return bad("radial_range must satisfy 0 < min <= stand_off <= max");
        }
        if self.cluster_cap == 0 || self.hemisphere_samples == 0 {
            return bad("cluster_cap and hemisphere_samples must be >= 1");
        }
        if self.ig_ray_rows == 0 || self.ig_ray_cols == 0 {
            return bad("information-gain ray grid must be non-empty");
        }
        if !(self.perturbation_cone_deg > 0.0 && self.perturbation_cone_deg < 90.0) {
            return bad("perturbation_cone_deg must lie in (0, 90)");
        }
        if self.view_direction.norm() == 0.0 {
            return bad("view_direction must be non-zero");
        }
        Ok(())
    }

    /// Hemisphere orientation: from the object back toward the robot side.
    pub fn facing(&self) -> Vector3 {
        -self.view_direction.normalize()
    }
}

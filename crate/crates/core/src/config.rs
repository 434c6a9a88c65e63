//! Run settings loaded from TOML.
//!
//! Key names follow the planning parameter table (`resolution`, `alpha`,
//! `beta`, `camera_max_range`, `background_confidence`,
//! `detection_confidence_threshold`) plus the remaining tunables. Unknown
//! keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::EvalParams;
use crate::geometry::{Point3, Vector3};
use crate::map::FusionParams;
use crate::planner::{EpisodeSetup, MotionModel, PlannerConfig, WorkspaceConfig};
use crate::scene::{CameraModel, DetectorModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Settings {
    pub resolution: f64,
    pub alpha: f64,
    pub beta: f64,
    pub camera_max_range: f64,
    pub background_confidence: f64,
    pub detection_confidence_threshold: f64,

    pub tau_c: f64,
    pub overlap: f64,
    pub stand_off: f64,
    pub cluster_cap: usize,
    pub hemisphere_samples: usize,
    pub radial_range: [f64; 2],
    pub ig_ray_rows: usize,
    pub ig_ray_cols: usize,
    pub perturbations_per_view: usize,
    pub perturbation_cone_deg: f64,
    pub kmeans_max_iter: usize,
    pub view_direction: [f64; 3],

    pub gamma: f64,
    pub lambda: f64,
    pub hit_log_odds: f64,
    pub miss_log_odds: f64,
    pub clamp_min: f64,
    pub clamp_max: f64,
    pub occupancy_threshold: f64,

    pub camera_fov_h_deg: f64,
    pub camera_fov_v_deg: f64,
    pub camera_ray_rows: usize,
    pub camera_ray_cols: usize,

    pub matching_radius: f64,
    pub min_cluster_size: usize,

    pub workspace_base: [f64; 3],
    pub workspace_inner_radius: f64,
    pub workspace_outer_radius: f64,
    pub workspace_samples: usize,
    pub workspace_resolution: f64,

    pub motion_speed: f64,
    pub capture_time: f64,
}

impl Default for Settings {
    fn default() -> Self {
        let p = PlannerConfig::default();
        let f = FusionParams::default();
        let c = CameraModel::default();
        let e = EvalParams::default();
        let w = WorkspaceConfig::default();
        let m = MotionModel::default();
        Self {
            resolution: 0.04,
            alpha: p.alpha,
            beta: p.beta,
            camera_max_range: c.max_range,
            background_confidence: f.background_confidence,
            detection_confidence_threshold: e.confidence_threshold,
            tau_c: p.tau_c,
            overlap: p.overlap,
            stand_off: p.stand_off,
            cluster_cap: p.cluster_cap,
            hemisphere_samples: p.hemisphere_samples,
            radial_range: p.radial_range,
            ig_ray_rows: p.ig_ray_rows,
            ig_ray_cols: p.ig_ray_cols,
            perturbations_per_view: p.perturbations_per_view,
            perturbation_cone_deg: p.perturbation_cone_deg,
            kmeans_max_iter: p.kmeans_max_iter,
            view_direction: [p.view_direction.x, p.view_direction.y, p.view_direction.z],
            gamma: f.gamma,
            lambda: f.lambda,
            hit_log_odds: f.hit_log_odds,
            miss_log_odds: f.miss_log_odds,
            clamp_min: f.clamp_min,
            clamp_max: f.clamp_max,
            occupancy_threshold: f.occupancy_threshold,
            camera_fov_h_deg: c.theta_h.to_degrees(),
            camera_fov_v_deg: c.theta_v.to_degrees(),
            camera_ray_rows: c.ray_rows,
            camera_ray_cols: c.ray_cols,
            matching_radius: e.radius,
            min_cluster_size: e.min_cluster_size,
            workspace_base: [w.base.x, w.base.y, w.base.z],
            workspace_inner_radius: w.inner_radius,
            workspace_outer_radius: w.outer_radius,
            workspace_samples: w.samples,
            workspace_resolution: w.resolution,
            motion_speed: m.speed,
            capture_time: m.capture_time,
        }
    }
}

impl Settings {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let s: Settings =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("settings serialize to toml")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0) {
            return Err(Error::Config("resolution must be positive".into()));
        }
        self.planner_config().validate()?;
        self.fusion_params().validate()?;
        self.camera_model().validate()?;
        if !(self.matching_radius > 0.0) {
            return Err(Error::Config("matching_radius must be positive".into()));
        }
        if !(self.motion_speed > 0.0 && self.capture_time >= 0.0) {
            return Err(Error::Config("motion_speed must be positive".into()));
        }
        if !(self.workspace_outer_radius > self.workspace_inner_radius
            && self.workspace_inner_radius >= 0.0
            && self.workspace_samples > 0
            && self.workspace_resolution > 0.0)
        {
            return Err(Error::Config("invalid workspace shell".into()));
        }
        Ok(())
    }

    pub fn planner_config(&self) -> PlannerConfig {
        let [x, y, z] = self.view_direction;
        PlannerConfig {
            alpha: self.alpha,
            beta: self.beta,
            tau_c: self.tau_c,
            overlap: self.overlap,
            stand_off: self.stand_off,
            cluster_cap: self.cluster_cap,
            hemisphere_samples: self.hemisphere_samples,
            radial_range: self.radial_range,
            ig_ray_rows: self.ig_ray_rows,
            ig_ray_cols: self.ig_ray_cols,
            perturbations_per_view: self.perturbations_per_view,
            perturbation_cone_deg: self.perturbation_cone_deg,
            kmeans_max_iter: self.kmeans_max_iter,
            view_direction: Vector3::new(x, y, z),
        }
    }

    pub fn fusion_params(&self) -> FusionParams {
        FusionParams {
            gamma: self.gamma,
            lambda: self.lambda,
            background_confidence: self.background_confidence,
            hit_log_odds: self.hit_log_odds,
            miss_log_odds: self.miss_log_odds,
            clamp_min: self.clamp_min,
            clamp_max: self.clamp_max,
            occupancy_threshold: self.occupancy_threshold,
        }
    }

    pub fn camera_model(&self) -> CameraModel {
        CameraModel {
            theta_h: self.camera_fov_h_deg.to_radians(),
            theta_v: self.camera_fov_v_deg.to_radians(),
            max_range: self.camera_max_range,
            ray_rows: self.camera_ray_rows,
            ray_cols: self.camera_ray_cols,
        }
    }

    pub fn eval_params(&self) -> EvalParams {
        EvalParams {
            radius: self.matching_radius,
            min_cluster_size: self.min_cluster_size,
            confidence_threshold: self.detection_confidence_threshold,
        }
    }

    pub fn workspace(&self) -> WorkspaceConfig {
        let [x, y, z] = self.workspace_base;
        WorkspaceConfig {
            base: Point3::new(x, y, z),
            inner_radius: self.workspace_inner_radius,
            outer_radius: self.workspace_outer_radius,
            samples: self.workspace_samples,
            resolution: self.workspace_resolution,
            seed: 0,
        }
    }

    pub fn episode_setup(&self) -> EpisodeSetup {
        EpisodeSetup {
            planner: self.planner_config(),
            camera: self.camera_model(),
            eval: self.eval_params(),
            motion: MotionModel {
                speed: self.motion_speed,
                capture_time: self.capture_time,
            },
        }
    }

    /// The detector with this file's background confidence and threshold.
    pub fn detector(&self, base: &DetectorModel) -> DetectorModel {
        DetectorModel {
            background_confidence: self.background_confidence,
            detection_threshold: self.detection_confidence_threshold,
            ..*base
        }
    }
}

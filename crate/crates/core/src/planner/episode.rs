//! The closed perception/action loop shared by all planners.

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use super::select::NbvMode;
use super::{
    baseline_grid, filter_feasible, select_next_view, PlannerConfig, PlannerMode,
    ReachabilityGrid, Viewpoint,
};
use crate::error::{Error, Result};
use crate::eval::{extract_clusters, score, EvalParams, TrialRecord};
use crate::geometry::CameraPose;
use crate::map::{OccupancyState, SemanticOctree};
use crate::rng::SimRng;
use crate::scene::{render_view, CameraModel, DetectorModel, SceneModel};

/// Converts executed motion into simulated elapsed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionModel {
    /// Mean end-effector speed, m/s.
    pub speed: f64,
    /// Seconds spent capturing and integrating each view.
    pub capture_time: f64,
}

impl Default for MotionModel {
    fn default() -> Self {
        Self {
            speed: 0.25,
            capture_time: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSetup {
    pub planner: PlannerConfig,
    pub camera: CameraModel,
    pub eval: EvalParams,
    pub motion: MotionModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    /// The baseline ran out of grid poses.
    GridExhausted,
    /// An NBV planner found no feasible candidate.
    NoFeasibleView,
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub records: Vec<TrialRecord>,
    pub poses: Vec<CameraPose>,
    pub stop: StopReason,
}

/// Run up to `n_views` perceive/integrate/evaluate/plan iterations.
///
/// All planners start at the first reachable baseline grid pose. The baseline
/// then walks its grid in order; the NBV modes call `select_next_view` with a
/// motion check that refuses poses inside occupied map voxels. Sensor noise
/// draws come from `rng`; planner sampling uses a stream forked from it.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    scene: &SceneModel,
    map: &mut SemanticOctree,
    mode: PlannerMode,
    n_views: usize,
    setup: &EpisodeSetup,
    grid: &ReachabilityGrid,
    detector: &DetectorModel,
    rng: &mut SimRng,
) -> Result<EpisodeOutcome> {
    if n_views == 0 {
        return Err(Error::Contract("an episode needs at least one view".into()));
    }
    let cfg = &setup.planner;
    let mut plan_rng = SimRng::seed_from_u64(rng.random());
    let grid_views = filter_feasible(
        baseline_grid(
            map.bounds(),
            &setup.camera,
            cfg.stand_off,
            cfg.overlap,
            &cfg.view_direction,
        )?,
        grid,
    );
    let Some(first) = grid_views.first() else {
        return Err(Error::Contract("no reachable baseline viewpoint to start from".into()));
    };

    let mut pose = first.pose;
    let mut records = Vec::with_capacity(n_views);
    let mut poses = Vec::with_capacity(n_views);
    let mut elapsed = 0.0;
    let mut stop = StopReason::Completed;
    let truth = scene.symptoms();

    for i in 0..n_views {
        let cloud = render_view(scene, &pose, &setup.camera, detector, rng);
        map.insert_point_cloud(&pose.position, &cloud);
        elapsed += setup.motion.capture_time;

        let clusters = extract_clusters(
            map,
            setup.eval.min_cluster_size,
            setup.eval.confidence_threshold,
        );
        let m = score(&clusters, truth, setup.eval.radius);
        records.push(TrialRecord {
            viewpoint_index: i,
            precision: m.precision,
            recall: m.recall,
            f1: m.f1,
            coverage: map.coverage(),
            elapsed,
            planner_mode: mode,
        });
        poses.push(pose);
        if i + 1 == n_views {
            break;
        }

        let next = match mode {
            PlannerMode::Baseline => grid_views.get(i + 1).copied(),
            PlannerMode::Volumetric | PlannerMode::Semantic => {
                let nbv = if mode == PlannerMode::Volumetric {
                    NbvMode::Volumetric
                } else {
                    NbvMode::Semantic
                };
                let map_ref: &SemanticOctree = map;
                let collision_free = |v: &Viewpoint| match map_ref.bounds().key_of(&v.pose.position) {
                    Some(k) => map_ref.occupancy_state(k).ok() != Some(OccupancyState::Occupied),
                    None => true,
                };
                select_next_view(
                    map_ref,
                    &pose,
                    cfg,
                    &setup.camera,
                    nbv,
                    grid,
                    &collision_free,
                    &mut plan_rng,
                )?
            }
        };
        let Some(next) = next else {
            stop = if mode == PlannerMode::Baseline {
                StopReason::GridExhausted
            } else {
                StopReason::NoFeasibleView
            };
            break;
        };
        elapsed += pose.distance_to(&next.pose) / setup.motion.speed;
        pose = next.pose;
    }
    Ok(EpisodeOutcome {
        records,
        poses,
        stop,
    })
}

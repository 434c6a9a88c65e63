use std::cmp::Ordering;

use rayon::prelude::*;

use super::{
    baseline_grid, cluster_voxels, filter_feasible, hemisphere_sample, perturbed_grid,
    semantic_gain, volumetric_gain, PlannerConfig, ReachabilityGrid, Viewpoint, ViewpointSource,
};
use crate::error::Result;
use crate::geometry::{lex_cmp, CameraPose};
use crate::map::SemanticOctree;
use crate::rng::SimRng;
use crate::scene::CameraModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbvMode {
    Volumetric,
    Semantic,
}

/// Perturbed midplane grid plus hemisphere samples around voxel clusters.
///
/// Volumetric mode clusters frontier voxels. Semantic mode clusters
/// low-confidence labelled voxels and falls back to frontiers when there
/// are none.
pub fn generate_candidates(
    map: &SemanticOctree,
    config: &PlannerConfig,
    camera: &CameraModel,
    mode: NbvMode,
    rng: &mut SimRng,
) -> Result<Vec<Viewpoint>> {
    let grid = baseline_grid(
        map.bounds(),
        camera,
        config.stand_off,
        config.overlap,
        &config.view_direction,
    )?;
    let mut out = perturbed_grid(
        &grid,
        config.perturbation_cone_deg.to_radians(),
        config.perturbations_per_view,
        rng,
    )?;

    let (keys, source) = match mode {
        NbvMode::Volumetric => (map.frontier_voxels(), ViewpointSource::FrontierCluster),
        NbvMode::Semantic => {
            let low = map.low_confidence_voxels(config.tau_c);
            if low.is_empty() {
                (map.frontier_voxels(), ViewpointSource::FrontierCluster)
            } else {
                (low, ViewpointSource::SemanticCluster)
            }
        }
    };
    let clusters = cluster_voxels(
        &keys,
        map.bounds(),
        config.cluster_cap,
        config.kmeans_max_iter,
        rng,
    );
    let facing = config.facing();
    for c in &clusters {
        out.extend(hemisphere_sample(
            &c.centroid,
            &facing,
            config.radial_range,
            config.hemisphere_samples,
            source,
            rng,
        )?);
    }
    Ok(out)
}

/// Utility order: higher utility, then lower cost, then lexicographic position.
pub(crate) fn rank(a: &Viewpoint, b: &Viewpoint) -> Ordering {
    b.utility
        .total_cmp(&a.utility)
        .then(a.cost.total_cmp(&b.cost))
        .then(lex_cmp(&a.pose.position, &b.pose.position))
}

/// Fill in gain, cost and utility for each candidate.
pub(crate) fn score(
    candidates: &mut [Viewpoint],
    map: &SemanticOctree,
    current: &CameraPose,
    config: &PlannerConfig,
    camera: &CameraModel,
    mode: NbvMode,
) {
    let (rows, cols) = (config.ig_ray_rows, config.ig_ray_cols);
    candidates.par_iter_mut().for_each(|v| {
        v.gain = match mode {
            NbvMode::Volumetric => volumetric_gain(&v.pose, map, camera, rows, cols),
            NbvMode::Semantic => semantic_gain(&v.pose, map, camera, rows, cols, config.beta),
        };
        v.cost = current.distance_to(&v.pose);
        v.utility = v.gain - config.alpha * v.cost;
    });
}

/// Pick the next view: generate, drop unreachable poses, score, and return
/// the best-ranked candidate that `motion_ok` accepts.
#[allow(clippy::too_many_arguments)]
pub fn select_next_view(
    map: &SemanticOctree,
    current: &CameraPose,
    config: &PlannerConfig,
    camera: &CameraModel,
    mode: NbvMode,
    grid: &ReachabilityGrid,
    motion_ok: &dyn Fn(&Viewpoint) -> bool,
    rng: &mut SimRng,
) -> Result<Option<Viewpoint>> {
    let candidates = generate_candidates(map, config, camera, mode, rng)?;
    let mut feasible = filter_feasible(candidates, grid);
    score(&mut feasible, map, current, config, camera, mode);
    Ok(pick(feasible, motion_ok))
}

pub(crate) fn pick(mut scored: Vec<Viewpoint>, motion_ok: &dyn Fn(&Viewpoint) -> bool) -> Option<Viewpoint> {
    scored.sort_by(rank);
    scored.into_iter().find(|v| motion_ok(v))
}

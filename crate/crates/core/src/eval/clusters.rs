use std::collections::VecDeque;

use crate::geometry::{lex_cmp, Point3, Vector3};
use crate::map::{ClassId, OccupancyState, SemanticOctree, VoxelKey};

#[derive(Debug, Clone, PartialEq)]
pub struct PredictedCluster {
    pub class_id: ClassId,
    pub member_keys: Vec<VoxelKey>,
    pub centroid: Point3,
    pub mean_confidence: f64,
}

/// 26-connected components of occupied voxels sharing a non-background class
/// with confidence at least `confidence_threshold`.
///
/// Components smaller than `min_cluster_size` are dropped. Output is sorted by
/// centroid, lexicographically.
pub fn extract_clusters(
    map: &SemanticOctree,
    min_cluster_size: usize,
    confidence_threshold: f64,
) -> Vec<PredictedCluster> {
    let bounds = map.bounds();
    let occ = map.params().occupancy_threshold;
    let qualifying = |v: &crate::map::SemanticVoxel| {
        v.state(occ) == OccupancyState::Occupied
            && v.label
                .is_some_and(|l| !l.class.is_background() && l.confidence >= confidence_threshold)
    };

    let n = map.total_voxels();
    let mut visited = vec![false; n];
    let mut out = Vec::new();
    for (idx, v) in map.voxels().iter().enumerate() {
        if visited[idx] || !qualifying(v) {
            continue;
        }
        let class = v.label.expect("qualifying voxel has a label").class;
        visited[idx] = true;
        let mut members = Vec::new();
        let mut queue = VecDeque::from([bounds.key_at(idx)]);
        while let Some(k) = queue.pop_front() {
            members.push(k);
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let nk = VoxelKey::new(k.ix + dx, k.iy + dy, k.iz + dz);
                        if !bounds.contains_key(nk) {
                            continue;
                        }
                        let ni = bounds.linear_index(nk);
                        let nv = &map.voxels()[ni];
                        if !visited[ni] && qualifying(nv) && nv.class_id() == Some(class) {
                            visited[ni] = true;
                            queue.push_back(nk);
                        }
                    }
                }
            }
        }
        if members.len() < min_cluster_size.max(1) {
            continue;
        }
        members.sort();
        let count = members.len() as f64;
        let sum = members
            .iter()
            .fold(Vector3::zeros(), |acc, k| acc + bounds.voxel_center(*k).coords);
        let conf: f64 = members
            .iter()
            .map(|k| map.voxels()[bounds.linear_index(*k)].confidence())
            .sum();
        out.push(PredictedCluster {
            class_id: class,
            centroid: Point3::from(sum / count),
            mean_confidence: conf / count,
            member_keys: members,
        });
    }
    out.sort_by(|a, b| lex_cmp(&a.centroid, &b.centroid).then(a.class_id.cmp(&b.class_id)));
    out
}

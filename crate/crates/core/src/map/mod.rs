//! Bounded semantic occupancy map.
//!
//! The map is a dense voxel grid over a fixed region of interest. Each voxel
//! carries occupancy log-odds and, once occupied, a fused semantic label.

mod bounds;
mod fusion;
pub mod snapshot;

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

pub use bounds::{RoiBounds, VoxelKey, WalkEnd};
pub(crate) use bounds::FACE_NEIGHBORS;
pub use fusion::{fuse_label, ClassId, FusionParams, SemanticLabel};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Vector3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OccupancyState {
    Free,
    Occupied,
    Unknown,
}

/// Per-voxel payload.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SemanticVoxel {
    pub log_odds: f64,
    /// Set on the first occupancy update; unknown voxels have it cleared.
    pub observed: bool,
    pub label: Option<SemanticLabel>,
}

impl SemanticVoxel {
    pub fn has_semantics(&self) -> bool {
        self.label.is_some()
    }

    pub fn class_id(&self) -> Option<ClassId> {
        self.label.map(|l| l.class)
    }

    pub fn confidence(&self) -> f64 {
        self.label.map_or(0.0, |l| l.confidence)
    }

    pub fn state(&self, threshold: f64) -> OccupancyState {
        if !self.observed {
            OccupancyState::Unknown
        } else if self.log_odds >= threshold {
            OccupancyState::Occupied
        } else {
            OccupancyState::Free
        }
    }
}

/// Fuse an observation into an occupied voxel.
pub fn fuse_semantic(
    voxel: &SemanticVoxel,
    incoming_class: ClassId,
    incoming_conf: f64,
    params: &FusionParams,
) -> Result<SemanticVoxel> {
    if voxel.state(params.occupancy_threshold) != OccupancyState::Occupied {
        return Err(Error::Contract(
            "semantic fusion requires an occupied voxel".into(),
        ));
    }
    let label = fuse_label(
        voxel.label,
        SemanticLabel::new(incoming_class, incoming_conf),
        params,
    )?;
    Ok(SemanticVoxel {
        label: Some(label),
        ..*voxel
    })
}

/// A measured 3D point with its semantic prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemanticPoint {
    pub position: Point3,
    pub class_id: ClassId,
    pub confidence: f64,
    /// The ray returned nothing within range; `position` sits at max range.
    pub is_max_range: bool,
}

impl SemanticPoint {
    pub fn hit(position: Point3, class_id: ClassId, confidence: f64) -> Self {
        Self {
            position,
            class_id,
            confidence,
            is_max_range: false,
        }
    }

    pub fn max_range(position: Point3, background_confidence: f64) -> Self {
        Self {
            position,
            class_id: ClassId::BACKGROUND,
            confidence: background_confidence,
            is_max_range: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InsertStats {
    pub free_updates: usize,
    pub occupied_updates: usize,
    pub semantic_updates: usize,
    pub rejected_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayTerminal {
    Hit,
    MaxRange,
    ExitedRoi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RayResult {
    pub terminal: RayTerminal,
    pub hit: Option<VoxelKey>,
    /// Distance from the origin to the entry face of the hit voxel.
    pub hit_distance: Option<f64>,
    pub traversed: Vec<VoxelKey>,
}

/// Semantic occupancy map over a bounded region.
///
/// Named after the octree it stands in for; storage is a flat grid because
/// the region is small and fixed.
#[derive(Debug, Clone)]
pub struct SemanticOctree {
    bounds: RoiBounds,
    params: FusionParams,
    voxels: Vec<SemanticVoxel>,
    known: usize,
}

const MARK_FREE: u8 = 1;
const MARK_HIT: u8 = 2;

impl SemanticOctree {
    pub fn new(bounds: RoiBounds, params: FusionParams) -> Result<Self> {
        bounds.validate()?;
        params.validate()?;
        Ok(Self {
            voxels: vec![SemanticVoxel::default(); bounds.total_voxels()],
            bounds,
            params,
            known: 0,
        })
    }

    pub fn bounds(&self) -> &RoiBounds {
        &self.bounds
    }

    pub fn params(&self) -> &FusionParams {
        &self.params
    }

    pub fn total_voxels(&self) -> usize {
        self.voxels.len()
    }

    pub fn known_voxels(&self) -> usize {
        self.known
    }

    pub fn voxel(&self, key: VoxelKey) -> Result<&SemanticVoxel> {
        if !self.bounds.contains_key(key) {
            return Err(Error::OutOfBounds(key));
        }
        Ok(&self.voxels[self.bounds.linear_index(key)])
    }

    pub fn occupancy_state(&self, key: VoxelKey) -> Result<OccupancyState> {
        Ok(self.voxel(key)?.state(self.params.occupancy_threshold))
    }

    /// State lookup for keys already known to be inside the grid.
    #[inline]
    pub(crate) fn state_unchecked(&self, key: VoxelKey) -> OccupancyState {
        self.voxels[self.bounds.linear_index(key)].state(self.params.occupancy_threshold)
    }

    #[inline]
    pub(crate) fn voxel_unchecked(&self, key: VoxelKey) -> &SemanticVoxel {
        &self.voxels[self.bounds.linear_index(key)]
    }

    /// Iterate all voxels in key order.
    pub fn iter(&self) -> impl Iterator<Item = (VoxelKey, &SemanticVoxel)> + '_ {
        self.voxels
            .iter()
            .enumerate()
            .map(|(i, v)| (self.bounds.key_at(i), v))
    }

    /// Apply one log-odds increment to a voxel.
    pub fn update_occupancy(&mut self, key: VoxelKey, delta: f64) -> Result<()> {
        if !self.bounds.contains_key(key) {
            return Err(Error::OutOfBounds(key));
        }
        self.update_index(self.bounds.linear_index(key), delta);
        Ok(())
    }

    fn update_index(&mut self, idx: usize, delta: f64) {
        let p = self.params;
        let v = &mut self.voxels[idx];
        if !v.observed {
            v.observed = true;
            self.known += 1;
        }
        v.log_odds = (v.log_odds + delta).clamp(p.clamp_min, p.clamp_max);
        if v.state(p.occupancy_threshold) != OccupancyState::Occupied {
            // Semantics live only on occupied voxels.
            v.label = None;
        }
    }

    /// Fuse a semantic observation into the voxel at `key`, which must be occupied.
    pub fn fuse_at(&mut self, key: VoxelKey, class: ClassId, confidence: f64) -> Result<()> {
        let fused = fuse_semantic(self.voxel(key)?, class, confidence, &self.params)?;
        let idx = self.bounds.linear_index(key);
        self.voxels[idx] = fused;
        Ok(())
    }

    /// Integrate a point cloud captured from `origin`.
    ///
    /// Within one call each voxel takes at most one miss and one hit update,
    /// and a hit suppresses the miss. Each occupied endpoint voxel fuses the
    /// single most confident point that landed in it (first wins on ties).
    pub fn insert_point_cloud(&mut self, origin: &Point3, points: &[SemanticPoint]) -> InsertStats {
        let mut stats = InsertStats::default();
        if points.is_empty() {
            return stats;
        }
        if !(origin.x.is_finite() && origin.y.is_finite() && origin.z.is_finite()) {
            stats.rejected_points = points.len();
            return stats;
        }

        let mut marks = vec![0u8; self.voxels.len()];
        let mut touched: Vec<usize> = Vec::new();
        let mut best: BTreeMap<usize, (ClassId, f64)> = BTreeMap::new();
        let bounds = self.bounds;

        for pt in points {
            let p = &pt.position;
            let valid = p.x.is_finite()
                && p.y.is_finite()
                && p.z.is_finite()
                && (0.0..=1.0).contains(&pt.confidence);
            if !valid {
                stats.rejected_points += 1;
                continue;
            }
            let end_key = if pt.is_max_range {
                None
            } else {
                bounds.key_of(p)
            };
            let seg = p - origin;
            let len = seg.norm();
            if len > 0.0 {
                let dir = seg / len;
                bounds.walk_ray(origin, &dir, len, |key, _, _| {
                    if Some(key) != end_key {
                        let idx = bounds.linear_index(key);
                        if marks[idx] == 0 {
                            touched.push(idx);
                        }
                        marks[idx] |= MARK_FREE;
                    }
                    ControlFlow::Continue(())
                });
            }
            if let Some(key) = end_key {
                let idx = bounds.linear_index(key);
                if marks[idx] == 0 {
                    touched.push(idx);
                }
                marks[idx] |= MARK_HIT;
                best.entry(idx)
                    .and_modify(|b| {
                        if pt.confidence > b.1 {
                            *b = (pt.class_id, pt.confidence);
                        }
                    })
                    .or_insert((pt.class_id, pt.confidence));
            }
        }

        touched.sort_unstable();
        let (hit, miss) = (self.params.hit_log_odds, self.params.miss_log_odds);
        for &idx in &touched {
            if marks[idx] & MARK_HIT != 0 {
                self.update_index(idx, hit);
                stats.occupied_updates += 1;
            } else {
                self.update_index(idx, miss);
                stats.free_updates += 1;
            }
        }

        let threshold = self.params.occupancy_threshold;
        for (idx, (class, conf)) in best {
            let v = &self.voxels[idx];
            if v.state(threshold) != OccupancyState::Occupied {
                continue;
            }
            let fused = fuse_label(v.label, SemanticLabel::new(class, conf), &self.params)
                .expect("confidence validated on input");
            self.voxels[idx].label = Some(fused);
            stats.semantic_updates += 1;
        }
        stats
    }

    /// March from `origin` until the first occupied voxel, `max_range`, or
    /// the edge of the region.
    pub fn cast_ray(&self, origin: &Point3, direction: &Vector3, max_range: f64) -> Result<RayResult> {
        let n = direction.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Contract("ray direction must be non-zero".into()));
        }
        if !(max_range > 0.0) {
            return Err(Error::Contract("max_range must be positive".into()));
        }
        let dir = direction / n;
        let mut traversed = Vec::new();
        let mut hit = None;
        let end = self.bounds.walk_ray(origin, &dir, max_range, |key, t_in, _| {
            traversed.push(key);
            if self.state_unchecked(key) == OccupancyState::Occupied {
                hit = Some((key, t_in));
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        });
        let terminal = match end {
            WalkEnd::Stopped => RayTerminal::Hit,
            WalkEnd::MaxRange => RayTerminal::MaxRange,
            WalkEnd::ExitedRoi => RayTerminal::ExitedRoi,
        };
        Ok(RayResult {
            terminal,
            hit: hit.map(|h| h.0),
            hit_distance: hit.map(|h| h.1),
            traversed,
        })
    }

    /// Known voxels with at least one face neighbour in unknown space.
    pub fn frontier_voxels(&self) -> Vec<VoxelKey> {
        let mut out = Vec::new();
        for (idx, v) in self.voxels.iter().enumerate() {
            if !v.observed {
                continue;
            }
            let key = self.bounds.key_at(idx);
            let borders_unknown = FACE_NEIGHBORS.iter().any(|d| {
                let n = key.offset(*d);
                self.bounds.contains_key(n)
                    && !self.voxels[self.bounds.linear_index(n)].observed
            });
            if borders_unknown {
                out.push(key);
            }
        }
        out
    }

    /// Occupied, non-background labelled voxels with confidence below `threshold`.
    pub fn low_confidence_voxels(&self, threshold: f64) -> Vec<VoxelKey> {
        let occ = self.params.occupancy_threshold;
        self.voxels
            .iter()
            .enumerate()
            .filter(|(_, v)| {
                v.state(occ) == OccupancyState::Occupied
                    && v.label
                        .is_some_and(|l| !l.class.is_background() && l.confidence < threshold)
            })
            .map(|(i, _)| self.bounds.key_at(i))
            .collect()
    }

    /// Fraction of region voxels whose state is known.
    pub fn coverage(&self) -> f64 {
        self.known as f64 / self.voxels.len() as f64
    }

    pub(crate) fn from_parts(
        bounds: RoiBounds,
        params: FusionParams,
        voxels: Vec<SemanticVoxel>,
    ) -> Result<Self> {
        if voxels.len() != bounds.total_voxels() {
            return Err(Error::Snapshot("voxel count does not match bounds".into()));
        }
        let known = voxels.iter().filter(|v| v.observed).count();
        Ok(Self {
            bounds,
            params,
            voxels,
            known,
        })
    }

    pub(crate) fn voxels(&self) -> &[SemanticVoxel] {
        &self.voxels
    }
}

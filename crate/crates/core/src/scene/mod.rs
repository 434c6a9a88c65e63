//! Procedural symptomatic trees and the simulated sensor that observes them.

mod camera;
mod tree;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use camera::{render_view, CameraModel, DetectorModel};
pub(crate) use camera::line_of_sight;
pub use tree::{generate_scene, ScenePreset, TreeParams};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::map::{ClassId, RoiBounds, VoxelKey};

/// One ground-truth symptom.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomInstance {
    pub class_id: ClassId,
    pub centroid: Point3,
    pub voxels: Vec<VoxelKey>,
}

impl SymptomInstance {
    pub fn new(class_id: ClassId, voxels: Vec<VoxelKey>, bounds: &RoiBounds) -> Self {
        let n = voxels.len() as f64;
        let sum = voxels
            .iter()
            .fold(nalgebra::Vector3::zeros(), |acc, k| acc + bounds.voxel_center(*k).coords);
        Self {
            class_id,
            centroid: Point3::from(sum / n),
            voxels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Cell {
    Empty,
    Wood,
    Symptom(usize),
}

/// Ground-truth tree: occupied voxels plus placed symptom instances.
///
/// Immutable once built.
#[derive(Debug, Clone)]
pub struct SceneModel {
    bounds: RoiBounds,
    seed: u64,
    params: TreeParams,
    geometry: Vec<VoxelKey>,
    symptoms: Vec<SymptomInstance>,
    // 0 empty, 1 wood, k + 2 symptom k.
    cells: Vec<u32>,
}

impl SceneModel {
    pub fn new(
        bounds: RoiBounds,
        seed: u64,
        params: TreeParams,
        geometry: impl IntoIterator<Item = VoxelKey>,
        symptoms: Vec<SymptomInstance>,
    ) -> Result<Self> {
        bounds.validate()?;
        let geometry: Vec<VoxelKey> = geometry.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let mut cells = vec![0u32; bounds.total_voxels()];
        for k in &geometry {
            if !bounds.contains_key(*k) {
                return Err(Error::Generation(format!("geometry voxel {k:?} outside bounds")));
            }
            cells[bounds.linear_index(*k)] = 1;
        }
        for (i, s) in symptoms.iter().enumerate() {
            if s.voxels.is_empty() {
                return Err(Error::Generation(format!("symptom {i} has no voxels")));
            }
            if !matches!(s.class_id, ClassId::SHEPHERDS_CROOK | ClassId::CANKER) {
                return Err(Error::Generation(format!("symptom {i} has class {}", s.class_id)));
            }
            for k in &s.voxels {
                if !bounds.contains_key(*k) || cells[bounds.linear_index(*k)] != 1 {
                    return Err(Error::Generation(format!(
                        "symptom {i} voxel {k:?} is not free wood geometry"
                    )));
                }
                cells[bounds.linear_index(*k)] = i as u32 + 2;
            }
        }
        Ok(Self {
            bounds,
            seed,
            params,
            geometry,
            symptoms,
            cells,
        })
    }

    pub fn bounds(&self) -> &RoiBounds {
        &self.bounds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    pub fn geometry(&self) -> &[VoxelKey] {
        &self.geometry
    }

    pub fn symptoms(&self) -> &[SymptomInstance] {
        &self.symptoms
    }

    pub fn is_occupied(&self, key: VoxelKey) -> bool {
        self.bounds.contains_key(key) && self.cells[self.bounds.linear_index(key)] != 0
    }

    pub(crate) fn cell(&self, key: VoxelKey) -> Cell {
        match self.cells[self.bounds.linear_index(key)] {
            0 => Cell::Empty,
            1 => Cell::Wood,
            k => Cell::Symptom(k as usize - 2),
        }
    }

    pub fn count_class(&self, class: ClassId) -> usize {
        self.symptoms.iter().filter(|s| s.class_id == class).count()
    }

    /// Ground truth in the form the evaluator consumes.
    pub fn ground_truth(&self, radius: f64) -> Vec<GroundTruthPoint> {
        self.symptoms
            .iter()
            .enumerate()
            .map(|(id, s)| GroundTruthPoint {
                id,
                class_id: s.class_id,
                position: s.centroid,
                radius,
            })
            .collect()
    }

    /// Whether some straight line from `from` reaches a voxel of symptom
    /// `index` without crossing other geometry. Lines aim at the voxel
    /// center and eight points just inside its corners.
    pub fn symptom_visible_from(&self, index: usize, from: &Point3) -> bool {
        let r = self.bounds.resolution;
        let own = |idx: usize| self.cells[idx] == index as u32 + 2;
        self.symptoms[index].voxels.iter().any(|k| {
            let c = self.bounds.voxel_center(*k);
            std::iter::once(c)
                .chain((0..8).map(|m| {
                    let s = |bit: usize| if m & bit == 0 { -0.45 } else { 0.45 };
                    c + nalgebra::Vector3::new(s(1), s(2), s(4)) * r
                }))
                .any(|t| line_of_sight(self, from, &t, own))
        })
    }

    pub fn to_file(&self) -> SceneFile {
        SceneFile {
            format_version: SCENE_FORMAT_VERSION,
            seed: self.seed,
            params: self.params.clone(),
            bounds: self.bounds,
            geometry: self.geometry.iter().map(|k| [k.ix, k.iy, k.iz]).collect(),
            symptoms: self.symptoms.clone(),
        }
    }

    pub fn from_file(file: SceneFile) -> Result<Self> {
        if file.format_version != SCENE_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported scene format version {}",
                file.format_version
            )));
        }
        Self::new(
            file.bounds,
            file.seed,
            file.params,
            file.geometry.into_iter().map(|[x, y, z]| VoxelKey::new(x, y, z)),
            file.symptoms,
        )
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.to_file())?;
        crate::io_util::write_atomic(path, text.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file(serde_json::from_str(&text)?)
    }
}

pub const SCENE_FORMAT_VERSION: u32 = 1;

/// On-disk scene fixture (JSON).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub format_version: u32,
    pub seed: u64,
    pub params: TreeParams,
    pub bounds: RoiBounds,
    pub geometry: Vec<[i32; 3]>,
    pub symptoms: Vec<SymptomInstance>,
}

/// A labelled ground-truth location with its matching radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthPoint {
    pub id: usize,
    pub class_id: ClassId,
    pub position: Point3,
    pub radius: f64,
}

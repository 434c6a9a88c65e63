//! Recursive-branching tree generator.
//!
//! A tree is a tapered vertical trunk, scaffold branches off the trunk,
//! further branching levels below those, and thin shoots on the outermost
//! branches. Shepherd's crooks sit at shoot tips; cankers are small patches on
//! woody surfaces. Geometry is voxelized as capsules and the region of
//! interest is fitted to the result.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{SceneModel, SymptomInstance};
use crate::error::{Error, Result};
use crate::geometry::{Point3, Vector3};
use crate::map::{ClassId, RoiBounds, VoxelKey, FACE_NEIGHBORS};
use crate::planner::{baseline_grid, PlannerConfig};
use crate::rng::{fnv1a, mix_seed, rng_from_seed, SimRng};

use super::CameraModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenePreset {
    /// Full canopy with both symptom classes.
    Orchard,
    /// Sparse, shallow canopy carrying six shepherd's crooks.
    Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeParams {
    pub resolution: f64,
    pub trunk_base: Point3,
    pub trunk_height: [f64; 2],
    pub trunk_radius: [f64; 2],
    /// Woody branching levels below the trunk.
    pub levels: [usize; 2],
    pub scaffolds: [usize; 2],
    pub children: [usize; 2],
    pub scaffold_length: [f64; 2],
    pub length_decay: f64,
    pub branch_radius: f64,
    pub elevation_deg: [f64; 2],
    /// Branch directions are squashed along the viewing axis by this factor.
    pub depth_squash: f64,
    pub shoots_per_tip: [usize; 2],
    pub shoot_length: [f64; 2],
    pub crooks: [usize; 2],
    pub cankers: [usize; 2],
    pub symptom_voxels: [usize; 2],
    pub min_symptom_spacing: f64,
    pub margin: f64,
    /// Place one canker where no midplane-grid camera can see it.
    pub require_hidden: bool,
    pub view_direction: Vector3,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            resolution: 0.04,
            trunk_base: Point3::new(1.0, 0.0, 0.1),
            trunk_height: [0.9, 1.1],
            trunk_radius: [0.06, 0.025],
            levels: [2, 4],
            scaffolds: [4, 6],
            children: [1, 3],
            scaffold_length: [0.3, 0.5],
            length_decay: 0.6,
            branch_radius: 0.025,
            elevation_deg: [10.0, 55.0],
            depth_squash: 0.5,
            shoots_per_tip: [2, 3],
            shoot_length: [0.08, 0.16],
            crooks: [5, 8],
            cankers: [5, 8],
            symptom_voxels: [1, 4],
            min_symptom_spacing: 0.2,
            margin: 0.08,
            require_hidden: true,
            view_direction: Vector3::x(),
        }
    }
}

impl TreeParams {
    pub fn preset(preset: ScenePreset) -> Self {
        match preset {
            ScenePreset::Orchard => Self::default(),
            ScenePreset::Lab => Self {
                levels: [2, 2],
                scaffolds: [4, 5],
                children: [2, 2],
                depth_squash: 0.15,
                crooks: [6, 6],
                cankers: [0, 0],
                require_hidden: false,
                ..Self::default()
            },
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Generation(m.to_string()));
        if !(self.resolution > 0.0) {
            return bad("resolution must be positive");
        }
        for (name, r) in [
            ("levels", self.levels),
            ("scaffolds", self.scaffolds),
            ("children", self.children),
            ("shoots_per_tip", self.shoots_per_tip),
            ("crooks", self.crooks),
            ("cankers", self.cankers),
            ("symptom_voxels", self.symptom_voxels),
        ] {
            if r[0] > r[1] {
                return Err(Error::Generation(format!("{name}: min exceeds max")));
            }
        }
        if self.symptom_voxels[0] == 0 {
            return bad("symptoms need at least one voxel");
        }
        if self.levels[0] == 0 || self.scaffolds[0] == 0 {
            return bad("a tree needs at least one branching level and one scaffold");
        }
        if self.require_hidden && self.cankers[1] == 0 {
            return bad("a hidden symptom requires at least one canker");
        }
        if self.view_direction.norm() == 0.0 {
            return bad("view_direction must be non-zero");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Wood,
    Shoot,
}

struct Segment {
    a: Point3,
    b: Point3,
    radius: f64,
    part: Part,
}

fn urange(rng: &mut SimRng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.random_range(r[0]..=r[1])
    } else {
        r[0]
    }
}

fn irange(rng: &mut SimRng, r: [usize; 2]) -> usize {
    rng.random_range(r[0]..=r[1])
}

fn direction(azimuth: f64, elevation: f64, squash: f64) -> Vector3 {
    Vector3::new(
        elevation.cos() * azimuth.cos() * squash,
        elevation.cos() * azimuth.sin(),
        elevation.sin(),
    )
    .normalize()
}

struct Grower<'a> {
    params: &'a TreeParams,
    depth: usize,
    segments: Vec<Segment>,
}

impl Grower<'_> {
    fn branch(&mut self, rng: &mut SimRng, start: Point3, azimuth: f64, length: f64, radius: f64, level: usize) {
        let p = self.params;
        let elev = urange(rng, p.elevation_deg).to_radians();
        let end = start + direction(azimuth, elev, p.depth_squash) * length;
        self.segments.push(Segment {
            a: start,
            b: end,
            radius,
            part: Part::Wood,
        });
        if level < self.depth {
            for _ in 0..irange(rng, p.children) {
                let f = rng.random_range(0.35..=1.0);
                let at = start + (end - start) * f;
                let turn = rng.random_range(20f64..=60.0).to_radians()
                    * if rng.random::<bool>() { 1.0 } else { -1.0 };
                let len = length * p.length_decay * rng.random_range(0.8..=1.2);
                self.branch(rng, at, azimuth + turn, len, radius * 0.6, level + 1);
            }
        } else {
            for _ in 0..irange(rng, p.shoots_per_tip) {
                let f = rng.random_range(0.5..=1.0);
                let at = start + (end - start) * f;
                let az = azimuth + rng.random_range(-1.0..=1.0);
                let el = rng.random_range(0.3..=1.2);
                let len = urange(rng, p.shoot_length);
                self.segments.push(Segment {
                    a: at,
                    b: at + direction(az, el, p.depth_squash) * len,
                    radius: 0.0,
                    part: Part::Shoot,
                });
            }
        }
    }
}

fn dist_to_segment(p: &Point3, a: &Point3, b: &Point3) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Voxels of a capsule; also returns the ordered centerline cells.
fn voxelize(canvas: &RoiBounds, seg: &Segment) -> (BTreeSet<VoxelKey>, Vec<VoxelKey>) {
    let r = canvas.resolution;
    let len = (seg.b - seg.a).norm();
    let n = ((len / (r / 4.0)).ceil() as usize).max(1);
    let mut line = Vec::new();
    for i in 0..=n {
        let p = seg.a + (seg.b - seg.a) * (i as f64 / n as f64);
        if let Some(k) = canvas.key_of(&p) {
            if line.last() != Some(&k) {
                line.push(k);
            }
        }
    }
    let mut cells: BTreeSet<VoxelKey> = line.iter().copied().collect();
    if seg.radius > 0.0 {
        let lo = seg.a.inf(&seg.b) - Vector3::repeat(seg.radius);
        let hi = seg.a.sup(&seg.b) + Vector3::repeat(seg.radius);
        let g = |p: &Point3| ((p - canvas.min_corner) / r).map(|v| v.floor() as i32);
        let (l, h) = (g(&lo), g(&hi));
        for ix in l.x..=h.x {
            for iy in l.y..=h.y {
                for iz in l.z..=h.z {
                    let k = VoxelKey::new(ix, iy, iz);
                    if canvas.contains_key(k)
                        && dist_to_segment(&canvas.voxel_center(k), &seg.a, &seg.b) <= seg.radius
                    {
                        cells.insert(k);
                    }
                }
            }
        }
    }
    (cells, line)
}

fn shift(k: VoxelKey, by: [i32; 3]) -> VoxelKey {
    VoxelKey::new(k.ix - by[0], k.iy - by[1], k.iz - by[2])
}

const MAX_ATTEMPTS: u64 = 32;

/// Generate a symptomatic tree. Identical `(seed, params)` give identical scenes.
///
/// A tree whose symptoms cannot be placed is regrown from the next derived
/// stream; the error of the last attempt is returned if none succeeds.
pub fn generate_scene(seed: u64, params: &TreeParams) -> Result<SceneModel> {
    params.validate()?;
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        match grow_scene(seed, attempt, params) {
            Ok(scene) => return Ok(scene),
            Err(e @ Error::Generation(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

fn grow_scene(seed: u64, attempt: u64, params: &TreeParams) -> Result<SceneModel> {
    let mut rng = rng_from_seed(mix_seed(&[seed, fnv1a("scene"), attempt]));
    let res = params.resolution;
    let base = params.trunk_base;

    let reach = params.scaffold_length[1] * 2.2 + 0.2;
    let canvas = RoiBounds::new(
        Point3::new(base.x - reach, base.y - reach, base.z),
        Point3::new(base.x + reach, base.y + reach, base.z + params.trunk_height[1] + reach),
        res,
    )?;

    let height = urange(&mut rng, params.trunk_height);
    let depth = irange(&mut rng, params.levels);
    let mut grower = Grower {
        params,
        depth,
        segments: Vec::new(),
    };
    const TRUNK_PIECES: usize = 4;
    for i in 0..TRUNK_PIECES {
        let f0 = i as f64 / TRUNK_PIECES as f64;
        let f1 = (i + 1) as f64 / TRUNK_PIECES as f64;
        let rad = params.trunk_radius[0] + (params.trunk_radius[1] - params.trunk_radius[0]) * f0;
        grower.segments.push(Segment {
            a: base + Vector3::z() * (height * f0),
            b: base + Vector3::z() * (height * f1),
            radius: rad,
            part: Part::Wood,
        });
    }
    let n_scaffolds = irange(&mut rng, params.scaffolds);
    let phase = rng.random_range(0.0..2.0 * PI);
    for i in 0..n_scaffolds {
        let h = rng.random_range(0.3..=0.85) * height;
        let az = phase + 2.0 * PI * i as f64 / n_scaffolds as f64 + rng.random_range(-0.4..=0.4);
        let len = urange(&mut rng, params.scaffold_length);
        grower.branch(&mut rng, base + Vector3::z() * h, az, len, params.branch_radius, 1);
    }

    let mut wood: BTreeSet<VoxelKey> = BTreeSet::new();
    let mut shoots: Vec<Vec<VoxelKey>> = Vec::new();
    for seg in &grower.segments {
        let (cells, line) = voxelize(&canvas, seg);
        wood.extend(cells.iter().copied());
        if seg.part == Part::Shoot && !line.is_empty() {
            shoots.push(line);
        }
    }
    if wood.is_empty() {
        return Err(Error::Generation("tree has no voxels inside the canvas".into()));
    }
    let shoot_cells: BTreeSet<VoxelKey> = shoots.iter().flatten().copied().collect();

    // Fit the region of interest to the geometry plus a margin.
    let m = (params.margin / res).round() as i32;
    let lo = [
        wood.iter().map(|k| k.ix).min().unwrap() - m,
        wood.iter().map(|k| k.iy).min().unwrap() - m,
        wood.iter().map(|k| k.iz).min().unwrap() - m,
    ];
    let hi = [
        wood.iter().map(|k| k.ix).max().unwrap() + m,
        wood.iter().map(|k| k.iy).max().unwrap() + m,
        wood.iter().map(|k| k.iz).max().unwrap() + m,
    ];
    let min_corner = canvas.min_corner + Vector3::new(lo[0] as f64, lo[1] as f64, lo[2] as f64) * res;
    let max_corner = canvas.min_corner
        + Vector3::new((hi[0] + 1) as f64, (hi[1] + 1) as f64, (hi[2] + 1) as f64) * res;
    let bounds = RoiBounds::new(min_corner, max_corner, res)?;
    let wood: BTreeSet<VoxelKey> = wood.into_iter().map(|k| shift(k, lo)).collect();
    let shoots: Vec<Vec<VoxelKey>> = shoots
        .into_iter()
        .map(|l| l.into_iter().map(|k| shift(k, lo)).collect())
        .collect();
    let shoot_cells: BTreeSet<VoxelKey> = shoot_cells.into_iter().map(|k| shift(k, lo)).collect();

    let bare = SceneModel::new(bounds, seed, params.clone(), wood.iter().copied(), Vec::new())?;

    // Woody surface voxels: not on a shoot, with an empty face neighbour.
    let bark: Vec<VoxelKey> = wood
        .iter()
        .copied()
        .filter(|k| !shoot_cells.contains(k))
        .filter(|k| FACE_NEIGHBORS.iter().any(|d| !bare.is_occupied(k.offset(*d))))
        .collect();

    let mut claimed: BTreeSet<VoxelKey> = BTreeSet::new();
    let mut symptoms: Vec<SymptomInstance> = Vec::new();
    let spaced = |s: &SymptomInstance, placed: &[SymptomInstance]| {
        placed
            .iter()
            .all(|o| (o.centroid - s.centroid).norm() >= params.min_symptom_spacing)
    };

    let n_crooks = irange(&mut rng, params.crooks);
    let n_cankers = irange(&mut rng, params.cankers);

    if params.require_hidden {
        let planner = PlannerConfig::default();
        let cams: Vec<Point3> = baseline_grid(
            &bounds,
            &CameraModel::default(),
            planner.stand_off,
            planner.overlap,
            &params.view_direction,
        )?
        .into_iter()
        .map(|v| v.pose.position)
        .collect();
        let mut order = bark.clone();
        order.shuffle(&mut rng);
        let hidden = order.into_iter().find(|k| {
            let probe = SceneModel::new(
                bounds,
                seed,
                params.clone(),
                wood.iter().copied(),
                vec![SymptomInstance::new(ClassId::CANKER, vec![*k], &bounds)],
            )
            .expect("probe symptom lies on wood");
            cams.iter().all(|c| !probe.symptom_visible_from(0, c))
        });
        let Some(k) = hidden else {
            return Err(Error::Generation(
                "no woody voxel is hidden from every midplane camera".into(),
            ));
        };
        claimed.insert(k);
        symptoms.push(SymptomInstance::new(ClassId::CANKER, vec![k], &bounds));
    }

    let mut tips: Vec<&Vec<VoxelKey>> = shoots.iter().collect();
    tips.shuffle(&mut rng);
    let mut crooks_placed = 0;
    for line in tips {
        if crooks_placed == n_crooks {
            break;
        }
        let size = irange(&mut rng, params.symptom_voxels).min(line.len());
        let voxels: Vec<VoxelKey> = line[line.len() - size..].iter().rev().copied().collect();
        if voxels.iter().any(|k| claimed.contains(k)) {
            continue;
        }
        let s = SymptomInstance::new(ClassId::SHEPHERDS_CROOK, voxels, &bounds);
        if spaced(&s, &symptoms) {
            claimed.extend(s.voxels.iter().copied());
            symptoms.push(s);
            crooks_placed += 1;
        }
    }
    if crooks_placed < n_crooks {
        return Err(Error::Generation(format!(
            "could only place {crooks_placed} of {n_crooks} shepherd's crooks"
        )));
    }

    let mut seeds = bark.clone();
    seeds.shuffle(&mut rng);
    let mut cankers_placed = symptoms
        .iter()
        .filter(|s| s.class_id == ClassId::CANKER)
        .count();
    let bark_set: BTreeSet<VoxelKey> = bark.iter().copied().collect();
    for seed_key in seeds {
        if cankers_placed >= n_cankers {
            break;
        }
        if claimed.contains(&seed_key) {
            continue;
        }
        let size = irange(&mut rng, params.symptom_voxels);
        let mut patch = vec![seed_key];
        let mut queue = VecDeque::from([seed_key]);
        let mut seen = BTreeSet::from([seed_key]);
        'grow: while let Some(k) = queue.pop_front() {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if patch.len() >= size {
                            break 'grow;
                        }
                        let n = k.offset([dx, dy, dz]);
                        if bark_set.contains(&n) && !claimed.contains(&n) && seen.insert(n) {
                            patch.push(n);
                            queue.push_back(n);
                        }
                    }
                }
            }
        }
        let s = SymptomInstance::new(ClassId::CANKER, patch, &bounds);
        if spaced(&s, &symptoms) {
            claimed.extend(s.voxels.iter().copied());
            symptoms.push(s);
            cankers_placed += 1;
        }
    }
    if cankers_placed < n_cankers {
        return Err(Error::Generation(format!(
            "could only place {cankers_placed} of {n_cankers} cankers"
        )));
    }

    SceneModel::new(bounds, seed, params.clone(), wood, symptoms)
}

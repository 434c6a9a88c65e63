//! Versioned binary map snapshots.
//!
//! Layout (little endian):
//!
//! ```text
//! magic      8 bytes  "BLSEMMAP"
//! version    u32      currently 1
//! bounds     7 × f64  min xyz, max xyz, resolution
//! params     8 × f64  gamma, lambda, background_confidence, hit, miss,
//!                     clamp_min, clamp_max, occupancy_threshold
//! count      u64      number of voxel records
//! records    count × { ix i32, iy i32, iz i32, log_odds f64,
//!                      class i32 (-1 = none), confidence f64 }
//! ```
//!
//! Only observed voxels are written. Floats are stored as raw bits so a
//! round trip is exact.

use std::io::{Read, Write};
use std::path::Path;

use super::{ClassId, FusionParams, RoiBounds, SemanticLabel, SemanticOctree, SemanticVoxel, VoxelKey};
use crate::error::{Error, Result};
use crate::geometry::Point3;

const MAGIC: &[u8; 8] = b"BLSEMMAP";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn write_snapshot<W: Write>(map: &SemanticOctree, mut w: W) -> std::io::Result<()> {
    let b = map.bounds();
    let p = map.params();
    w.write_all(MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    for v in [
        b.min_corner.x,
        b.min_corner.y,
        b.min_corner.z,
        b.max_corner.x,
        b.max_corner.y,
        b.max_corner.z,
        b.resolution,
        p.gamma,
        p.lambda,
        p.background_confidence,
        p.hit_log_odds,
        p.miss_log_odds,
        p.clamp_min,
        p.clamp_max,
        p.occupancy_threshold,
    ] {
        w.write_all(&v.to_le_bytes())?;
    }
    let observed: Vec<_> = map.iter().filter(|(_, v)| v.observed).collect();
    w.write_all(&(observed.len() as u64).to_le_bytes())?;
    for (key, v) in observed {
        for c in [key.ix, key.iy, key.iz] {
            w.write_all(&c.to_le_bytes())?;
        }
        w.write_all(&v.log_odds.to_le_bytes())?;
        let class = v.label.map_or(-1, |l| l.class.0 as i32);
        w.write_all(&class.to_le_bytes())?;
        w.write_all(&v.confidence().to_le_bytes())?;
    }
    Ok(())
}

fn read_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_i32<R: Read>(r: &mut R) -> std::io::Result<i32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(i32::from_le_bytes(b))
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<SemanticOctree> {
    let trunc = |e: std::io::Error| Error::Snapshot(format!("truncated snapshot: {e}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(trunc)?;
    if &magic != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let mut vb = [0u8; 4];
    r.read_exact(&mut vb).map_err(trunc)?;
    let version = u32::from_le_bytes(vb);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let mut h = [0f64; 15];
    for v in &mut h {
        *v = read_f64(&mut r).map_err(trunc)?;
    }
    let bounds = RoiBounds::new(
        Point3::new(h[0], h[1], h[2]),
        Point3::new(h[3], h[4], h[5]),
        h[6],
    )?;
    let params = FusionParams {
        gamma: h[7],
        lambda: h[8],
        background_confidence: h[9],
        hit_log_odds: h[10],
        miss_log_odds: h[11],
        clamp_min: h[12],
        clamp_max: h[13],
        occupancy_threshold: h[14],
    };
    params.validate()?;
    let mut cb = [0u8; 8];
    r.read_exact(&mut cb).map_err(trunc)?;
    let count = u64::from_le_bytes(cb) as usize;
    if count > bounds.total_voxels() {
        return Err(Error::Snapshot("more records than voxels".into()));
    }
    let mut voxels = vec![SemanticVoxel::default(); bounds.total_voxels()];
    for _ in 0..count {
        let key = VoxelKey::new(
            read_i32(&mut r).map_err(trunc)?,
            read_i32(&mut r).map_err(trunc)?,
            read_i32(&mut r).map_err(trunc)?,
        );
        if !bounds.contains_key(key) {
            return Err(Error::Snapshot(format!("record key {key:?} outside bounds")));
        }
        let log_odds = read_f64(&mut r).map_err(trunc)?;
        let class = read_i32(&mut r).map_err(trunc)?;
        let confidence = read_f64(&mut r).map_err(trunc)?;
        let label = match class {
            -1 => None,
            c if (0..=u16::MAX as i32).contains(&c) => {
                if !(0.0..=1.0).contains(&confidence) {
                    return Err(Error::Snapshot("confidence outside [0, 1]".into()));
                }
                Some(SemanticLabel::new(ClassId(c as u16), confidence))
            }
            c => return Err(Error::Snapshot(format!("invalid class id {c}"))),
        };
        voxels[bounds.linear_index(key)] = SemanticVoxel {
            log_odds,
            observed: true,
            label,
        };
    }
    SemanticOctree::from_parts(bounds, params, voxels)
}

pub fn save(map: &SemanticOctree, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_snapshot(map, &mut buf).map_err(|e| Error::io(path, e))?;
    crate::io_util::write_atomic(path, &buf)
}

pub fn load(path: &Path) -> Result<SemanticOctree> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_snapshot(bytes.as_slice())
}

/// Summary statistics printed by `inspect-map`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SnapshotStats {
    pub dims: [usize; 3],
    pub resolution: f64,
    pub total_voxels: usize,
    pub known_voxels: usize,
    pub free_voxels: usize,
    pub occupied_voxels: usize,
    pub coverage: f64,
    pub labelled_by_class: std::collections::BTreeMap<u16, usize>,
    pub frontier_voxels: usize,
}

pub fn stats(map: &SemanticOctree) -> SnapshotStats {
    use super::OccupancyState;
    let mut free = 0;
    let mut occ = 0;
    let mut by_class = std::collections::BTreeMap::new();
    for (key, v) in map.iter() {
        match map.occupancy_state(key).expect("iterated key is in bounds") {
            OccupancyState::Free => free += 1,
            OccupancyState::Occupied => occ += 1,
            OccupancyState::Unknown => {}
        }
        if let Some(l) = v.label {
            *by_class.entry(l.class.0).or_insert(0) += 1;
        }
    }
    SnapshotStats {
        dims: map.bounds().dims(),
        resolution: map.bounds().resolution,
        total_voxels: map.total_voxels(),
        known_voxels: map.known_voxels(),
        free_voxels: free,
        occupied_voxels: occ,
        coverage: map.coverage(),
        labelled_by_class: by_class,
        frontier_voxels: map.frontier_voxels().len(),
    }
}

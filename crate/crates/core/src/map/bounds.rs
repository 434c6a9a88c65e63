use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Vector3};

/// Integer voxel indices inside the ROI grid.
///
/// Ordering is lexicographic on `(ix, iy, iz)`, which is also the storage
/// order of [`RoiBounds::linear_index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VoxelKey {
    pub ix: i32,
    pub iy: i32,
    pub iz: i32,
}

impl VoxelKey {
    pub const fn new(ix: i32, iy: i32, iz: i32) -> Self {
        Self { ix, iy, iz }
    }

    pub(crate) fn offset(self, d: [i32; 3]) -> Self {
        Self::new(self.ix + d[0], self.iy + d[1], self.iz + d[2])
    }
}

pub(crate) const FACE_NEIGHBORS: [[i32; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

/// Axis-aligned region of interest discretized at a fixed resolution.
///
/// The grid has `ceil((max - min) / resolution)` cells per axis and starts at
/// `min_corner`; when the extent is not a multiple of the resolution the last
/// layer of cells pokes slightly past `max_corner`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoiBounds {
    pub min_corner: Point3,
    pub max_corner: Point3,
    pub resolution: f64,
}

/// How a grid walk ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkEnd {
    /// The visitor asked to stop.
    Stopped,
    /// The length budget ran out inside the grid.
    MaxRange,
    /// The ray left the grid, or never entered it.
    ExitedRoi,
}

impl RoiBounds {
    pub fn new(min_corner: Point3, max_corner: Point3, resolution: f64) -> Result<Self> {
        let b = Self {
            min_corner,
            max_corner,
            resolution,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution.is_finite() && self.resolution > 0.0) {
            return Err(Error::InvalidRoi(format!(
                "resolution must be positive, got {}",
                self.resolution
            )));
        }
        for i in 0..3 {
            let (lo, hi) = (self.min_corner[i], self.max_corner[i]);
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::InvalidRoi(format!(
                    "axis {i}: max {hi} must exceed min {lo}"
                )));
            }
        }
        Ok(())
    }

    /// Cells per axis.
    pub fn dims(&self) -> [usize; 3] {
        let ext = self.max_corner - self.min_corner;
        // The epsilon keeps exact multiples (1.2 / 0.04) from rounding up a cell.
        [0, 1, 2].map(|i| ((ext[i] / self.resolution) - 1e-9).ceil().max(1.0) as usize)
    }

    pub fn total_voxels(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min_corner, &self.max_corner)
    }

    /// Upper corner of the discretized grid.
    pub fn grid_max(&self) -> Point3 {
        let d = self.dims();
        Point3::new(
            self.min_corner.x + d[0] as f64 * self.resolution,
            self.min_corner.y + d[1] as f64 * self.resolution,
            self.min_corner.z + d[2] as f64 * self.resolution,
        )
    }

    pub fn contains_key(&self, key: VoxelKey) -> bool {
        let d = self.dims();
        key.ix >= 0
            && key.iy >= 0
            && key.iz >= 0
            && (key.ix as usize) < d[0]
            && (key.iy as usize) < d[1]
            && (key.iz as usize) < d[2]
    }

    /// Key of the cell containing `p`, or `None` outside the grid.
    pub fn key_of(&self, p: &Point3) -> Option<VoxelKey> {
        if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
            return None;
        }
        let g = (p - self.min_corner) / self.resolution;
        let f = |v: f64| {
            let c = v.floor();
            if c < i32::MIN as f64 || c > i32::MAX as f64 {
                None
            } else {
                Some(c as i32)
            }
        };
        let key = VoxelKey::new(f(g.x)?, f(g.y)?, f(g.z)?);
        self.contains_key(key).then_some(key)
    }

    pub fn voxel_center(&self, key: VoxelKey) -> Point3 {
        let r = self.resolution;
        Point3::new(
            self.min_corner.x + (key.ix as f64 + 0.5) * r,
            self.min_corner.y + (key.iy as f64 + 0.5) * r,
            self.min_corner.z + (key.iz as f64 + 0.5) * r,
        )
    }

    /// Row-major index with `iz` fastest. Caller guarantees `contains_key`.
    pub fn linear_index(&self, key: VoxelKey) -> usize {
        let d = self.dims();
        (key.ix as usize * d[1] + key.iy as usize) * d[2] + key.iz as usize
    }

    pub fn key_at(&self, index: usize) -> VoxelKey {
        let d = self.dims();
        let iz = index % d[2];
        let iy = (index / d[2]) % d[1];
        let ix = index / (d[1] * d[2]);
        VoxelKey::new(ix as i32, iy as i32, iz as i32)
    }

    /// Parametric interval `[t_in, t_out]` where `origin + t * dir` is inside
    /// the grid box, or `None` if the line misses it.
    pub fn clip_ray(&self, origin: &Point3, dir: &Vector3) -> Option<(f64, f64)> {
        let hi = self.grid_max();
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            let (lo, hi) = (self.min_corner[i], hi[i]);
            if dir[i] == 0.0 {
                if origin[i] < lo || origin[i] >= hi {
                    return None;
                }
            } else {
                let a = (lo - origin[i]) / dir[i];
                let b = (hi - origin[i]) / dir[i];
                t0 = t0.max(a.min(b));
                t1 = t1.min(a.max(b));
            }
        }
        (t0 < t1).then_some((t0, t1))
    }

    /// Exact grid traversal of the segment `origin + t * dir`, `t ∈ [0, max_t]`.
    ///
    /// `dir` must be unit length so that `t` is metric distance. The visitor
    /// receives each cell the segment passes through with positive length,
    /// in order, together with the entry and exit parameters of that cell.
    /// Cells outside the grid are never reported; a segment starting outside
    /// is clipped to the grid first.
    pub fn walk_ray<F>(&self, origin: &Point3, dir: &Vector3, max_t: f64, mut visit: F) -> WalkEnd
    where
        F: FnMut(VoxelKey, f64, f64) -> ControlFlow<()>,
    {
        let Some((box_in, box_out)) = self.clip_ray(origin, dir) else {
            return WalkEnd::ExitedRoi;
        };
        let t_start = box_in.max(0.0);
        let t_end = box_out.min(max_t);
        if t_start >= t_end {
            return if box_in > max_t && box_out > 0.0 {
                WalkEnd::MaxRange
            } else {
                WalkEnd::ExitedRoi
            };
        }
        let ran_out = max_t < box_out;

        let d = self.dims();
        let r = self.resolution;
        let g0 = (origin - self.min_corner) / r;
        let entry = g0 + dir * (t_start / r);

        let mut cell = [0i64; 3];
        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for i in 0..3 {
            cell[i] = (entry[i].floor() as i64).clamp(0, d[i] as i64 - 1);
            if dir[i] > 0.0 {
                step[i] = 1;
                t_delta[i] = r / dir[i];
                t_max[i] = ((cell[i] + 1) as f64 - g0[i]) * r / dir[i];
            } else if dir[i] < 0.0 {
                step[i] = -1;
                t_delta[i] = -r / dir[i];
                t_max[i] = (cell[i] as f64 - g0[i]) * r / dir[i];
            }
        }

        let mut t_in = t_start;
        loop {
            let axis = if t_max[0] <= t_max[1] {
                if t_max[0] <= t_max[2] {
                    0
                } else {
                    2
                }
            } else if t_max[1] <= t_max[2] {
                1
            } else {
                2
            };
            let t_out = t_max[axis].min(t_end);
            // Exact corner crossings produce a zero-length cell; skip it.
            if t_out > t_in {
                let key = VoxelKey::new(cell[0] as i32, cell[1] as i32, cell[2] as i32);
                if visit(key, t_in, t_out).is_break() {
                    return WalkEnd::Stopped;
                }
            }
            if t_max[axis] >= t_end {
                break;
            }
            t_in = t_in.max(t_max[axis]);
            cell[axis] += step[axis];
            if cell[axis] < 0 || cell[axis] >= d[axis] as i64 {
                return WalkEnd::ExitedRoi;
            }
            t_max[axis] += t_delta[axis];
        }
        if ran_out {
            WalkEnd::MaxRange
        } else {
            WalkEnd::ExitedRoi
        }
    }
}

use rand::Rng;

use crate::geometry::{Point3, Vector3};
use crate::map::{RoiBounds, VoxelKey};
use crate::rng::SimRng;

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelCluster {
    pub member_keys: Vec<VoxelKey>,
    pub centroid: Point3,
}

fn mean(points: impl Iterator<Item = Point3>) -> Point3 {
    let (sum, n) = points.fold((Vector3::zeros(), 0usize), |(s, n), p| (s + p.coords, n + 1));
    Point3::from(sum / n as f64)
}

/// Lloyd's k-means over voxel centers with `k = ceil(n / cap)`.
///
/// Seeding is k-means++ from `rng`. Iterates until assignments stop changing
/// or `max_iter` rounds. Empty clusters are dropped from the output.
pub fn cluster_voxels(
    keys: &[VoxelKey],
    bounds: &RoiBounds,
    cap: usize,
    max_iter: usize,
    rng: &mut SimRng,
) -> Vec<VoxelCluster> {
    if keys.is_empty() {
        return Vec::new();
    }
    let cap = cap.max(1);
    let k = keys.len().div_ceil(cap);
    let pts: Vec<Point3> = keys.iter().map(|k| bounds.voxel_center(*k)).collect();

    let mut centers = Vec::with_capacity(k);
    centers.push(pts[rng.random_range(0..pts.len())]);
    let mut d2: Vec<f64> = pts.iter().map(|p| (p - centers[0]).norm_squared()).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = pts.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..pts.len())
        };
        let c = pts[next];
        centers.push(c);
        for (d, p) in d2.iter_mut().zip(&pts) {
            *d = d.min((p - c).norm_squared());
        }
    }

    let mut assign = vec![usize::MAX; pts.len()];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for (i, p) in pts.iter().enumerate() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, c) in centers.iter().enumerate() {
                let d = (p - c).norm_squared();
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![(Vector3::zeros(), 0usize); k];
        for (p, a) in pts.iter().zip(&assign) {
            sums[*a].0 += p.coords;
            sums[*a].1 += 1;
        }
        for (c, (s, n)) in centers.iter_mut().zip(sums) {
            if n > 0 {
                *c = Point3::from(s / n as f64);
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, a) in assign.iter().enumerate() {
        groups[*a].push(i);
    }
    groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|g| VoxelCluster {
            centroid: mean(g.iter().map(|&i| pts[i])),
            member_keys: g.into_iter().map(|i| keys[i]).collect(),
        })
        .collect()
}

//! Simulated semantic depth camera.
//!
//! A view casts an angular ray grid against ground-truth geometry, then runs
//! a parametric detector over the symptom instances that were hit and
//! rasterizes the resulting instance masks into per-ray labels.

use std::collections::BTreeMap;
use std::ops::ControlFlow;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SceneModel;
use crate::error::{Error, Result};
use crate::geometry::{CameraPose, Point3, Vector3};
use crate::map::{ClassId, SemanticPoint};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraModel {
    /// Horizontal field of view, radians.
    pub theta_h: f64,
    /// Vertical field of view, radians.
    pub theta_v: f64,
    pub max_range: f64,
    pub ray_rows: usize,
    pub ray_cols: usize,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self {
            theta_h: 60f64.to_radians(),
            theta_v: 45f64.to_radians(),
            max_range: 0.9,
            ray_rows: 72,
            ray_cols: 96,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        let fov_ok = |t: f64| t > 0.0 && t < std::f64::consts::PI;
        if !(fov_ok(self.theta_h) && fov_ok(self.theta_v)) {
            return Err(Error::Config("camera fields of view must lie in (0, pi)".into()));
        }
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return Err(Error::Config("camera max_range must be positive".into()));
        }
        if self.ray_rows < 2 || self.ray_cols < 2 {
            return Err(Error::Config("camera ray grid must be at least 2x2".into()));
        }
        Ok(())
    }

    /// Unit ray directions for a `rows × cols` pinhole grid through pixel
    /// centers, row-major from top-left.
    pub fn ray_directions(&self, pose: &CameraPose, rows: usize, cols: usize) -> Vec<Vector3> {
        let (f, l, u) = (pose.forward(), pose.left(), pose.up());
        let th = (self.theta_h / 2.0).tan();
        let tv = (self.theta_v / 2.0).tan();
        let mut out = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let sv = tv * (1.0 - 2.0 * (r as f64 + 0.5) / rows as f64);
            for c in 0..cols {
                let sh = th * (1.0 - 2.0 * (c as f64 + 0.5) / cols as f64);
                out.push((f + l * sh + u * sv).normalize());
            }
        }
        out
    }

    pub fn sensor_rays(&self, pose: &CameraPose) -> Vec<Vector3> {
        self.ray_directions(pose, self.ray_rows, self.ray_cols)
    }
}

/// Parametric stand-in for the instance segmentation network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorModel {
    /// Per-view probability that a visible instance is detected.
    pub p_detect: f64,
    pub conf_mean: f64,
    /// Half-width of the uniform confidence distribution around `conf_mean`.
    pub conf_spread: f64,
    /// Probability that a detection reports the other symptom class.
    pub p_misclass: f64,
    /// Per-view probability of one spurious detection patch.
    pub p_false_positive: f64,
    pub background_confidence: f64,
    /// Detections below this confidence are discarded.
    pub detection_threshold: f64,
    pub noise_seed: u64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        Self {
            p_detect: 0.8,
            conf_mean: 0.75,
            conf_spread: 0.15,
            p_misclass: 0.05,
            p_false_positive: 0.1,
            background_confidence: 0.3,
            detection_threshold: 0.3,
            noise_seed: 0,
        }
    }
}

impl DetectorModel {
    /// Detector that sees every visible instance with its true class.
    pub fn noiseless() -> Self {
        Self {
            p_detect: 1.0,
            conf_spread: 0.0,
            p_misclass: 0.0,
            p_false_positive: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(unit(self.p_detect)
            && unit(self.p_misclass)
            && unit(self.p_false_positive)
            && unit(self.background_confidence)
            && unit(self.detection_threshold)
            && unit(self.conf_mean))
        {
            return Err(Error::Config("detector probabilities must lie in [0, 1]".into()));
        }
        if !(self.conf_spread >= 0.0) {
            return Err(Error::Config("conf_spread must be >= 0".into()));
        }
        Ok(())
    }

    fn sample_confidence(&self, rng: &mut SimRng, lo: f64, hi: f64) -> f64 {
        let c = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        c.clamp(0.0, 1.0)
    }
}

/// What one sensor ray struck.
#[derive(Debug, Clone, Copy, PartialEq)]
enum RayHit {
    Miss,
    Wood,
    Symptom(usize),
}

struct Detection {
    class: ClassId,
    confidence: f64,
    pixels: Vec<usize>,
}

fn swap_class(c: ClassId) -> ClassId {
    match c {
        ClassId::SHEPHERDS_CROOK => ClassId::CANKER,
        ClassId::CANKER => ClassId::SHEPHERDS_CROOK,
        other => other,
    }
}

/// Render one semantic point cloud.
///
/// Rays that hit geometry within range yield surface points; all other rays
/// yield background points at max range. Random draws happen in a fixed
/// order, so equal inputs and rng state give identical output.
pub fn render_view(
    scene: &SceneModel,
    pose: &CameraPose,
    camera: &CameraModel,
    detector: &DetectorModel,
    rng: &mut SimRng,
) -> Vec<SemanticPoint> {
    let dirs = camera.sensor_rays(pose);
    let origin = pose.position;
    let bounds = scene.bounds();

    let mut hits = Vec::with_capacity(dirs.len());
    let mut positions = Vec::with_capacity(dirs.len());
    for dir in &dirs {
        let mut found = None;
        bounds.walk_ray(&origin, dir, camera.max_range, |key, t_in, t_out| {
            match scene.cell(key) {
                super::Cell::Empty => ControlFlow::Continue(()),
                cell => {
                    found = Some((cell, t_in, t_out));
                    ControlFlow::Break(())
                }
            }
        });
        match found {
            Some((cell, t_in, t_out)) => {
                // Nudge into the struck cell so the point voxelizes to it.
                let t = t_in + (0.5 * (t_out - t_in)).min(1e-6);
                if t <= camera.max_range {
                    positions.push(origin + dir * t);
                    hits.push(match cell {
                        super::Cell::Symptom(i) => RayHit::Symptom(i),
                        _ => RayHit::Wood,
                    });
                    continue;
                }
                positions.push(origin + dir * camera.max_range);
                hits.push(RayHit::Miss);
            }
            None => {
                positions.push(origin + dir * camera.max_range);
                hits.push(RayHit::Miss);
            }
        }
    }

    let mut masks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (px, h) in hits.iter().enumerate() {
        if let RayHit::Symptom(i) = h {
            masks.entry(*i).or_default().push(px);
        }
    }

    let mut detections = Vec::new();
    let spread_lo = detector.conf_mean - detector.conf_spread;
    let spread_hi = detector.conf_mean + detector.conf_spread;
    for (inst, pixels) in masks {
        let detected = rng.random::<f64>() < detector.p_detect;
        let swapped = rng.random::<f64>() < detector.p_misclass;
        let confidence = detector.sample_confidence(rng, spread_lo, spread_hi);
        if !detected || confidence < detector.detection_threshold {
            continue;
        }
        let true_class = scene.symptoms()[inst].class_id;
        detections.push(Detection {
            class: if swapped { swap_class(true_class) } else { true_class },
            confidence,
            pixels,
        });
    }

    if rng.random::<f64>() < detector.p_false_positive {
        let wood: Vec<usize> = (0..hits.len()).filter(|&i| hits[i] == RayHit::Wood).collect();
        if !wood.is_empty() {
            let seed_px = wood[rng.random_range(0..wood.len())];
            let class = if rng.random::<bool>() {
                ClassId::SHEPHERDS_CROOK
            } else {
                ClassId::CANKER
            };
            let confidence =
                detector.sample_confidence(rng, detector.detection_threshold, detector.conf_mean);
            let cols = camera.ray_cols as isize;
            let rows = camera.ray_rows as isize;
            let (r0, c0) = ((seed_px as isize) / cols, (seed_px as isize) % cols);
            let mut pixels = Vec::new();
            for r in (r0 - 2).max(0)..=(r0 + 2).min(rows - 1) {
                for c in (c0 - 2).max(0)..=(c0 + 2).min(cols - 1) {
                    let px = (r * cols + c) as usize;
                    if hits[px] == RayHit::Wood {
                        pixels.push(px);
                    }
                }
            }
            detections.push(Detection {
                class,
                confidence,
                pixels,
            });
        }
    }

    // Ascending confidence so stronger instances overwrite weaker ones.
    detections.sort_by(|a, b| a.confidence.total_cmp(&b.confidence));
    let mut labels = vec![(ClassId::BACKGROUND, detector.background_confidence); hits.len()];
    for det in &detections {
        for &px in &det.pixels {
            labels[px] = (det.class, det.confidence);
        }
    }

    hits.iter()
        .zip(positions)
        .zip(labels)
        .map(|((h, p), (class, conf))| match h {
            RayHit::Miss => SemanticPoint::max_range(p, detector.background_confidence),
            _ => SemanticPoint::hit(p, class, conf),
        })
        .collect()
}

/// Whether the straight segment from `from` to `target` reaches it without
/// crossing other geometry.
pub(crate) fn line_of_sight(scene: &SceneModel, from: &Point3, target: &Point3, accept: impl Fn(usize) -> bool) -> bool {
    let seg = target - from;
    let len = seg.norm();
    if len == 0.0 {
        return true;
    }
    let dir = seg / len;
    let bounds = scene.bounds();
    let mut clear = true;
    bounds.walk_ray(from, &dir, len, |key, _, _| {
        let idx = bounds.linear_index(key);
        match scene.cell(key) {
            super::Cell::Empty => ControlFlow::Continue(()),
            _ if accept(idx) => ControlFlow::Break(()),
            _ => {
                clear = false;
                ControlFlow::Break(())
            }
        }
    });
    clear
}

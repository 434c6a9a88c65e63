//! Acceptance suite. Each criterion prints a single PASS/FAIL line; the
//! process exits non-zero if any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use blight_core::config::Settings;
use blight_core::eval::{score_points, PredictedCluster};
use blight_core::experiment::{run_compare, ExperimentSpec};
use blight_core::map::fuse_semantic;
use blight_core::planner::{
    baseline_grid, footprint, generate_candidates, grid_spacing, filter_feasible,
    select_next_view, semantic_gain, volumetric_gain, NbvMode, PlannerConfig, PlannerMode,
    Viewpoint,
};
use blight_core::rng::rng_from_seed;
use blight_core::scene::{generate_scene, render_view, CameraModel, DetectorModel, TreeParams};
use blight_core::{
    CameraPose, ClassId, FusionParams, OccupancyState, Point3, RoiBounds, SemanticLabel,
    SemanticOctree, SemanticVoxel, Vector3, VoxelKey,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit_s: f64, what: &str) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < limit_s, || {
        format!("{what} took {:.2} s, limit {limit_s} s", elapsed.as_secs_f64())
    })
}

fn unit_dir(rng: &mut ChaCha8Rng) -> Vector3 {
    loop {
        let v = Vector3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n;
        }
    }
}

// ---------------------------------------------------------------- 1

/// Independent restatement of the fusion rules.
fn fusion_oracle(stored: Option<(u16, f64)>, class: u16, conf: f64, gamma: f64, lambda: f64) -> (u16, f64) {
    match stored {
        None => (class, conf),
        Some((c, s)) if c == class => (c, ((s + conf) / 2.0 + gamma).clamp(0.0, 1.0)),
        Some((c, s)) => {
            let (k, m) = if conf > s { (class, conf) } else { (c, s) };
            (k, (m * (1.0 - lambda)).clamp(0.0, 1.0))
        }
    }
}

fn occupied_voxel(label: Option<SemanticLabel>) -> SemanticVoxel {
    SemanticVoxel {
        log_odds: 0.85,
        observed: true,
        label,
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let p = FusionParams::default();
    let lab = |c: u16, s: f64| Some(SemanticLabel::new(ClassId(c), s));
    let cases = [
        (None, (2u16, 0.7), (2u16, 0.7)),
        (lab(1, 0.5), (1, 0.7), (1, 0.65)),
        (lab(1, 0.4), (2, 0.8), (2, 0.72)),
        (lab(1, 0.8), (2, 0.4), (1, 0.72)),
    ];
    for (stored, (ic, is), (ec, es)) in cases {
        let out = fuse_semantic(&occupied_voxel(stored), ClassId(ic), is, &p).map_err(|e| e.to_string())?;
        let l = out.label.ok_or("fused voxel lost its label")?;
        ensure(l.class == ClassId(ec) && (l.confidence - es).abs() <= 1e-12, || {
            format!("example {stored:?} + ({ic}, {is}) gave {l:?}, expected ({ec}, {es})")
        })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xF051);
    let trials = 100_000;
    let mut violations = 0usize;
    let mut first = None;
    for _ in 0..trials {
        let params = FusionParams {
            gamma: rng.random_range(0.0..0.3),
            lambda: rng.random_range(0.0..0.9),
            ..FusionParams::default()
        };
        let stored = if rng.random_bool(0.15) {
            None
        } else {
            Some((rng.random_range(0..3u16), rng.random_range(0.0..=1.0)))
        };
        let class = rng.random_range(0..3u16);
        let conf = rng.random_range(0.0..=1.0);
        let out = fuse_semantic(
            &occupied_voxel(stored.map(|(c, s)| SemanticLabel::new(ClassId(c), s))),
            ClassId(class),
            conf,
            &params,
        )
        .map_err(|e| e.to_string())?
        .label
        .ok_or("fused voxel lost its label")?;
        let (ec, es) = fusion_oracle(stored, class, conf, params.gamma, params.lambda);
        let mut ok = out.class == ClassId(ec) && (out.confidence - es).abs() <= 1e-12;
        ok &= (0.0..=1.0).contains(&out.confidence);
        if let Some((c, s)) = stored {
            if c != class {
                let expect = (1.0 - params.lambda) * s.max(conf);
                ok &= (out.confidence - expect).abs() <= 1e-12;
                if conf > s {
                    ok &= out.class == ClassId(class);
                }
                if params.lambda > 0.0 && s.max(conf) > 0.0 {
                    ok &= out.confidence < s.max(conf);
                }
            } else if conf >= s {
                ok &= out.confidence >= s.min(1.0) - 1e-15;
            }
        }
        if !ok {
            violations += 1;
            first.get_or_insert((stored, class, conf, out));
        }
    }
    ensure(violations == 0, || format!("{violations} violations, first {first:?}"))?;
    within(start.elapsed(), 5.0, "criterion 1")?;
    Ok(format!(
        "4 examples to 1e-12, {trials} random triples, 0 violations, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 2

/// Voxels hit by samples every `step` along `[0, t_end)`, plus the sample at
/// `t_end` minus a hair.
fn dense_samples(b: &RoiBounds, o: &Point3, d: &Vector3, t_end: f64, step: f64) -> Vec<(f64, Option<VoxelKey>)> {
    let mut out = Vec::new();
    let mut k = 0u64;
    loop {
        let t = k as f64 * step;
        if t >= t_end {
            break;
        }
        out.push((t, b.key_of(&(o + d * t))));
        k += 1;
    }
    let t_last = t_end * (1.0 - 1e-12);
    out.push((t_last, b.key_of(&(o + d * t_last))));
    out
}

fn face_adjacent_or_same(a: VoxelKey, b: VoxelKey) -> bool {
    (a.ix - b.ix).abs() + (a.iy - b.iy).abs() + (a.iz - b.iz).abs() <= 1
}

/// Bisect between two samples until every pair of consecutive keys is equal
/// or face-adjacent, collecting the keys found.
#[allow(clippy::too_many_arguments)]
fn refine(b: &RoiBounds, o: &Point3, d: &Vector3, t0: f64, k0: VoxelKey, t1: f64, k1: VoxelKey, out: &mut BTreeSet<VoxelKey>) {
    if face_adjacent_or_same(k0, k1) || t1 - t0 < 1e-13 {
        return;
    }
    let tm = 0.5 * (t0 + t1);
    let Some(km) = b.key_of(&(o + d * tm)) else {
        return;
    };
    out.insert(km);
    refine(b, o, d, t0, k0, tm, km, out);
    refine(b, o, d, tm, km, t1, k1, out);
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let res = 0.04;
    let b = RoiBounds::new(Point3::new(-1.0, -1.0, 0.0), Point3::new(1.0, 1.0, 2.0), res)
        .map_err(|e| e.to_string())?;
    ensure(b.dims() == [50, 50, 50], || format!("dims {:?}", b.dims()))?;
    let map = SemanticOctree::new(b, FusionParams::default()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x7A4E);
    let n = 1000;
    let (mut refined_equal, mut raw_equal, mut raw_subset, mut dupes) = (0, 0, 0, 0);
    let mut first_bad = None;
    for i in 0..n {
        let o = Point3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.0..2.0),
        );
        let d = unit_dir(&mut rng);
        let max_range = rng.random_range(0.2..3.5);
        let ray = map.cast_ray(&o, &d, max_range).map_err(|e| e.to_string())?;
        let traversed: BTreeSet<VoxelKey> = ray.traversed.iter().copied().collect();
        if traversed.len() != ray.traversed.len() {
            dupes += 1;
        }

        let (_, box_out) = b.clip_ray(&o, &d).ok_or("origin inside the box must clip")?;
        let t_end = box_out.min(max_range);
        let samples = dense_samples(&b, &o, &d, t_end, res / 10.0);
        let raw: BTreeSet<VoxelKey> = samples.iter().filter_map(|s| s.1).collect();
        let mut refined = raw.clone();
        for w in samples.windows(2) {
            if let ((t0, Some(k0)), (t1, Some(k1))) = (w[0], w[1]) {
                refine(&b, &o, &d, t0, k0, t1, k1, &mut refined);
            }
        }
        raw_equal += usize::from(raw == traversed);
        raw_subset += usize::from(raw.is_subset(&traversed));
        if refined == traversed {
            refined_equal += 1;
        } else {
            first_bad.get_or_insert(i);
        }
    }
    let elapsed = start.elapsed();
    let detail = format!(
        "{refined_equal}/{n} rays equal to the dense r/10 oracle with sub-step refinement, \
         raw r/10 sample set equal on {raw_equal}/{n} and contained on {raw_subset}/{n}, \
         {dupes} duplicate reports, {:.2} s",
        elapsed.as_secs_f64()
    );
    ensure(refined_equal == n && raw_subset == n && dupes == 0, || {
        format!("{detail}; first mismatch at ray {first_bad:?}")
    })?;
    within(elapsed, 30.0, "criterion 2")?;
    Ok(detail)
}

// ---------------------------------------------------------------- 3

/// Brute force: every voxel whose box the segment crosses with positive
/// length, ordered by entry distance, then walked until the first occupied.
fn oracle_ray(map: &SemanticOctree, o: &Point3, d: &Vector3, max_range: f64) -> (f64, f64) {
    let b = map.bounds();
    let r = b.resolution;
    let end = o + d * max_range;
    let dims = b.dims();
    let lo_idx = |x: f64, i: usize| (((x - b.min_corner[i]) / r).floor() as i64 - 1).clamp(0, dims[i] as i64 - 1);
    let mut lo = [0i64; 3];
    let mut hi = [0i64; 3];
    for i in 0..3 {
        lo[i] = lo_idx(o[i].min(end[i]), i);
        hi[i] = (((o[i].max(end[i]) - b.min_corner[i]) / r).floor() as i64 + 1).clamp(0, dims[i] as i64 - 1);
    }
    let mut hits: Vec<(f64, VoxelKey)> = Vec::new();
    for ix in lo[0]..=hi[0] {
        for iy in lo[1]..=hi[1] {
            for iz in lo[2]..=hi[2] {
                let vmin = [
                    b.min_corner.x + ix as f64 * r,
                    b.min_corner.y + iy as f64 * r,
                    b.min_corner.z + iz as f64 * r,
                ];
                let (mut t0, mut t1) = (0.0f64, max_range);
                for i in 0..3 {
                    let (a, c) = (vmin[i], vmin[i] + r);
                    if d[i] == 0.0 {
                        if o[i] < a || o[i] >= c {
                            t1 = -1.0;
                        }
                    } else {
                        let p = (a - o[i]) / d[i];
                        let q = (c - o[i]) / d[i];
                        t0 = t0.max(p.min(q));
                        t1 = t1.min(p.max(q));
                    }
                }
                if t1 > t0 {
                    hits.push((t0, VoxelKey::new(ix as i32, iy as i32, iz as i32)));
                }
            }
        }
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    let bg = map.params().background_confidence;
    let th = map.params().occupancy_threshold;
    let mut unknown = 0.0;
    let mut sem = 0.0;
    for (_, k) in hits {
        let v = map.voxel(k).expect("oracle keys lie in the map");
        match v.state(th) {
            OccupancyState::Unknown => unknown += 1.0,
            OccupancyState::Free => {}
            OccupancyState::Occupied => {
                sem = 1.0 - v.label.map_or(bg, |l| l.confidence);
                break;
            }
        }
    }
    (unknown, sem)
}

fn oracle_dirs(pose: &CameraPose, cam: &CameraModel, rows: usize, cols: usize) -> Vec<Vector3> {
    let m = pose.orientation.to_rotation_matrix();
    let (th, tv) = ((cam.theta_h / 2.0).tan(), (cam.theta_v / 2.0).tan());
    let mut out = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let y = th * (1.0 - (2 * j + 1) as f64 / cols as f64);
            let z = tv * (1.0 - (2 * i + 1) as f64 / rows as f64);
            out.push((m * Vector3::new(1.0, y, z)).normalize());
        }
    }
    out
}

fn random_map(rng: &mut ChaCha8Rng) -> SemanticOctree {
    let b = RoiBounds::new(Point3::origin(), Point3::new(1.2, 1.2, 1.2), 0.04).expect("valid bounds");
    let mut map = SemanticOctree::new(b, FusionParams::default()).expect("valid map");
    let p_known = rng.random_range(0.1..0.9);
    let p_occ = rng.random_range(0.005..0.15);
    for idx in 0..b.total_voxels() {
        let k = b.key_at(idx);
        if !rng.random_bool(p_known) {
            continue;
        }
        if rng.random_bool(p_occ) {
            map.update_occupancy(k, 0.85).expect("in bounds");
            if rng.random_bool(0.6) {
                let class = ClassId(rng.random_range(0..3));
                map.fuse_at(k, class, rng.random_range(0.0..=1.0)).expect("occupied");
            }
        } else {
            map.update_occupancy(k, -0.4).expect("in bounds");
        }
    }
    map
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6A17);
    let cam = CameraModel::default();
    let cfg = PlannerConfig::default();
    let (rows, cols) = (cfg.ig_ray_rows, cfg.ig_ray_cols);
    let mut worst = 0.0f64;
    for m in 0..100 {
        let map = random_map(&mut rng);
        let pos = Point3::new(
            rng.random_range(-0.3..1.5),
            rng.random_range(-0.3..1.5),
            rng.random_range(-0.3..1.5),
        );
        let target = Point3::new(
            rng.random_range(0.2..1.0),
            rng.random_range(0.2..1.0),
            rng.random_range(0.2..1.0),
        );
        let pose = CameraPose::looking_at(pos, &target);
        let beta = rng.random_range(0.0..=1.0);

        let dirs = oracle_dirs(&pose, &cam, rows, cols);
        let terms: Vec<(f64, f64)> = dirs.iter().map(|d| oracle_ray(&map, &pos, d, cam.max_range)).collect();
        let n = terms.len() as f64;
        let vol_oracle = terms.iter().map(|t| t.0).sum::<f64>() / n;
        let sem_oracle = |b: f64| terms.iter().map(|t| (1.0 - b) * t.0 + b * t.1).sum::<f64>() / n;

        let vol = volumetric_gain(&pose, &map, &cam, rows, cols);
        let sem = semantic_gain(&pose, &map, &cam, rows, cols, beta);
        let g0 = semantic_gain(&pose, &map, &cam, rows, cols, 0.0);
        let gh = semantic_gain(&pose, &map, &cam, rows, cols, 0.5);
        let g1 = semantic_gain(&pose, &map, &cam, rows, cols, 1.0);
        let e_vol = (vol - vol_oracle).abs();
        let e_sem = (sem - sem_oracle(beta)).abs();
        worst = worst.max(e_vol).max(e_sem);
        ensure(e_vol <= 1e-9, || format!("map {m}: volumetric {vol} vs oracle {vol_oracle}"))?;
        ensure(e_sem <= 1e-9, || format!("map {m}: semantic {sem} vs oracle {}", sem_oracle(beta)))?;
        ensure(g0.to_bits() == vol.to_bits(), || format!("map {m}: beta=0 gives {g0}, volumetric {vol}"))?;
        ensure((gh - 0.5 * (g0 + g1)).abs() <= 1e-9, || {
            format!("map {m}: not affine in beta ({g0}, {gh}, {g1})")
        })?;
    }
    Ok(format!(
        "100 random 30^3 maps, worst oracle error {worst:.1e}, beta=0 bit-identical, affine in beta, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let cam = CameraModel {
        theta_h: 60f64.to_radians(),
        theta_v: 60f64.to_radians(),
        ..CameraModel::default()
    };
    let (w, h) = footprint(&cam, 0.9);
    let expect = 2.0 * 0.9 * 30f64.to_radians().tan();
    ensure((w - expect).abs() <= 1e-9 && (h - expect).abs() <= 1e-9, || format!("footprint {w} x {h}"))?;
    let (du, dv) = grid_spacing(w, h, 0.2).map_err(|e| e.to_string())?;
    ensure((du - 0.8 * w).abs() <= 1e-9 && (dv - 0.8 * h).abs() <= 1e-9, || format!("spacing {du} x {dv}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0xB45E);
    let axes = [Vector3::x(), -Vector3::x(), Vector3::y(), -Vector3::y()];
    let mut samples = 0usize;
    for trial in 0..50 {
        let cam = CameraModel {
            theta_h: rng.random_range(30.0f64..100.0).to_radians(),
            theta_v: rng.random_range(30.0f64..90.0).to_radians(),
            ..CameraModel::default()
        };
        let rho = rng.random_range(0.0..0.6);
        let d = rng.random_range(0.3..1.2);
        let res = 0.04;
        let lo = Point3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(0.0..1.0),
        );
        let ext = Vector3::new(
            rng.random_range(0.2..2.0),
            rng.random_range(0.2..2.0),
            rng.random_range(0.2..2.0),
        );
        let roi = RoiBounds::new(lo, lo + ext, res).map_err(|e| e.to_string())?;
        let dir = if trial % 5 == 4 {
            let v = unit_dir(&mut rng);
            Vector3::new(v.x, v.y, 0.3 * v.z).normalize()
        } else {
            axes[trial % 4]
        };
        let views = baseline_grid(&roi, &cam, d, rho, &dir).map_err(|e| e.to_string())?;
        let (w, h) = footprint(&cam, d);

        // Midplane rectangle spanned by the projected ROI corners.
        let center = roi.center();
        let (mut u_rng, mut v_rng) = ((f64::MAX, f64::MIN), (f64::MAX, f64::MIN));
        let left0 = views[0].pose.left();
        let up0 = views[0].pose.up();
        let hi = roi.grid_max();
        for m in 0..8 {
            let c = Point3::new(
                if m & 1 == 0 { roi.min_corner.x } else { hi.x },
                if m & 2 == 0 { roi.min_corner.y } else { hi.y },
                if m & 4 == 0 { roi.min_corner.z } else { hi.z },
            );
            let rel = c - center;
            u_rng = (u_rng.0.min(rel.dot(&left0)), u_rng.1.max(rel.dot(&left0)));
            v_rng = (v_rng.0.min(rel.dot(&up0)), v_rng.1.max(rel.dot(&up0)));
        }
        let n = 41;
        for i in 0..n {
            for j in 0..n {
                let a = u_rng.0 + (u_rng.1 - u_rng.0) * i as f64 / (n - 1) as f64;
                let c = v_rng.0 + (v_rng.1 - v_rng.0) * j as f64 / (n - 1) as f64;
                let p = center + left0 * a + up0 * c;
                samples += 1;
                let covered = views.iter().any(|v| {
                    let rel = p - v.pose.position;
                    (rel.dot(&v.pose.forward()) - d).abs() < 1e-9
                        && rel.dot(&v.pose.left()).abs() <= w / 2.0 + 1e-9
                        && rel.dot(&v.pose.up()).abs() <= h / 2.0 + 1e-9
                });
                ensure(covered, || format!("trial {trial}: midplane point {p:?} not covered"))?;
            }
        }
    }
    Ok(format!(
        "w = h = {w:.9}, spacing = 0.8 w, 50 random configurations, {samples} midplane samples covered"
    ))
}

// ---------------------------------------------------------------- 5

fn cluster(class: u16, p: Point3) -> PredictedCluster {
    PredictedCluster {
        class_id: ClassId(class),
        member_keys: Vec::new(),
        centroid: p,
        mean_confidence: 0.5,
    }
}

fn criterion_5() -> Outcome {
    let t = 0.10;
    let truths6: Vec<(ClassId, Point3)> = (0..6).map(|i| (ClassId(1), Point3::new(i as f64, 0.0, 0.0))).collect();
    let m = score_points(&[], &truths6, t);
    ensure(m.precision == 0.0 && m.recall == 0.0 && m.fn_ == 6 && m.f1 == 0.0, || format!("empty case {m:?}"))?;

    let truth = [(ClassId(1), Point3::new(0.5, 0.5, 0.5))];
    let two = [
        cluster(1, Point3::new(0.55, 0.5, 0.5)),
        cluster(1, Point3::new(0.5, 0.45, 0.5)),
    ];
    let m = score_points(&two, &truth, t);
    ensure(
        (m.tp_p, m.fp, m.tp_c, m.fn_) == (2, 0, 1, 0) && m.precision == 1.0 && m.recall == 1.0,
        || format!("many-to-many case {m:?}"),
    )?;

    let m = score_points(
        &[cluster(1, Point3::new(0.55, 0.5, 0.5))],
        &[(ClassId(2), Point3::new(0.5, 0.5, 0.5))],
        t,
    );
    ensure((m.fp, m.fn_) == (1, 1) && m.f1 == 0.0, || format!("class mismatch case {m:?}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5C03);
    let n = 10_000;
    for trial in 0..n {
        let nc = rng.random_range(0..12);
        let nt = rng.random_range(0..10);
        let pt = |rng: &mut ChaCha8Rng| {
            Point3::new(rng.random_range(0.0..0.6), rng.random_range(0.0..0.6), rng.random_range(0.0..0.6))
        };
        let clusters: Vec<PredictedCluster> = (0..nc).map(|_| cluster(rng.random_range(1..3), pt(&mut rng))).collect();
        let truth: Vec<(ClassId, Point3)> = (0..nt).map(|_| (ClassId(rng.random_range(1..3)), pt(&mut rng))).collect();
        let r1 = rng.random_range(0.01..0.3);
        let r2 = r1 + rng.random_range(0.0..0.3);
        let a = score_points(&clusters, &truth, r1);
        let b = score_points(&clusters, &truth, r2);
        ensure(a.tp_p + a.fp == nc && a.tp_c + a.fn_ == nt, || format!("trial {trial}: counts {a:?}"))?;
        ensure(b.tp_p >= a.tp_p && b.tp_c >= a.tp_c, || format!("trial {trial}: radius monotonicity {a:?} -> {b:?}"))?;
        let matched = |c: &PredictedCluster| truth.iter().any(|(k, p)| *k == c.class_id && (p - c.centroid).norm() <= r1);
        let tp_p = clusters.iter().filter(|c| matched(c)).count();
        let tp_c = truth
            .iter()
            .filter(|(k, p)| clusters.iter().any(|c| c.class_id == *k && (p - c.centroid).norm() <= r1))
            .count();
        ensure((a.tp_p, a.tp_c) == (tp_p, tp_c), || format!("trial {trial}: {a:?} vs oracle ({tp_p}, {tp_c})"))?;
        ensure((0.0..=1.0).contains(&a.f1), || format!("trial {trial}: f1 {}", a.f1))?;
    }
    Ok(format!("3 examples exact, {n} random configurations conserve counts and are radius-monotone"))
}

// ---------------------------------------------------------------- 6, 7

fn comparison_spec(out: &Path) -> ExperimentSpec {
    ExperimentSpec {
        scene_seeds: vec![0, 1, 2, 3, 4],
        runs_per_scene: 10,
        n_views: 30,
        planner_modes: PlannerMode::ALL.to_vec(),
        output_dir: out.to_path_buf(),
        preset: blight_core::scene::ScenePreset::Orchard,
        settings: Settings::default(),
        detector: DetectorModel::default(),
        tree: None,
    }
}

fn criterion_6(out: &Path) -> Outcome {
    let start = Instant::now();
    let spec = comparison_spec(out);
    let s = &spec.settings;
    ensure(
        (s.resolution, s.alpha, s.beta, s.camera_max_range, s.background_confidence, s.detection_confidence_threshold)
            == (0.04, 0.1, 0.7, 0.9, 0.3, 0.3),
        || "settings differ from the planning parameter table".into(),
    )?;
    let report = run_compare(&spec).map_err(|e| e.to_string())?;
    ensure(report.failures.is_empty(), || format!("failed runs: {:?}", report.failures))?;

    let mut finals: BTreeMap<PlannerMode, (f64, f64, usize)> = BTreeMap::new();
    for ep in &report.episodes {
        let recs = ep.outcome.as_ref().map_err(Clone::clone)?;
        for w in recs.windows(2) {
            ensure(w[1].coverage >= w[0].coverage, || {
                format!("{} scene {} run {}: coverage fell at view {}", ep.planner, ep.scene_seed, ep.run_id, w[1].viewpoint_index)
            })?;
        }
        let last = recs.last().ok_or("empty episode")?;
        let e = finals.entry(ep.planner).or_default();
        e.0 += last.f1;
        e.1 += last.coverage;
        e.2 += 1;
    }
    let mean = |m: PlannerMode| {
        let (f, c, n) = finals[&m];
        (f / n as f64, c / n as f64, n)
    };
    let (bf, bc, bn) = mean(PlannerMode::Baseline);
    let (vf, vc, vn) = mean(PlannerMode::Volumetric);
    let (sf, sc, sn) = mean(PlannerMode::Semantic);
    let table = format!(
        "final F1/coverage over {bn}/{vn}/{sn} runs: baseline {bf:.4}/{bc:.4}, volumetric {vf:.4}/{vc:.4}, semantic {sf:.4}/{sc:.4}, {:.0} s",
        start.elapsed().as_secs_f64()
    );
    ensure(bn == 50 && vn == 50 && sn == 50, || format!("expected 50 runs per planner; {table}"))?;
    ensure(vc > bc && vc > sc, || format!("volumetric coverage is not the highest; {table}"))?;
    ensure(sf > bf && sf > vf, || format!("semantic F1 is not the highest; {table}"))?;
    within(start.elapsed(), 600.0, "criterion 6")?;
    Ok(format!("{table}; all coverage curves non-decreasing"))
}

fn csv_files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).expect("readable output dir") {
            let p = e.expect("dir entry").path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).expect("under root").to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn criterion_7(first: &Path, second: &Path) -> Outcome {
    let mut spec = comparison_spec(second);
    // The output directory is part of the spec but not of the results.
    spec.output_dir = second.to_path_buf();
    run_compare(&spec).map_err(|e| e.to_string())?;
    let a = csv_files(first);
    let b = csv_files(second);
    ensure(a == b, || "the two runs produced different file sets".into())?;
    let mut differing_lines = 0usize;
    for f in &a {
        let x = std::fs::read_to_string(first.join(f)).map_err(|e| e.to_string())?;
        let y = std::fs::read_to_string(second.join(f)).map_err(|e| e.to_string())?;
        let (xl, yl): (Vec<&str>, Vec<&str>) = (x.lines().collect(), y.lines().collect());
        ensure(xl.len() == yl.len(), || format!("{}: line counts differ", f.display()))?;
        for (l1, l2) in xl.iter().zip(&yl) {
            if l1 != l2 {
                let ts = l1.starts_with("# created_unix:") && l2.starts_with("# created_unix:");
                ensure(ts, || format!("{}: '{l1}' vs '{l2}'", f.display()))?;
                differing_lines += 1;
            }
        }
    }
    Ok(format!(
        "{} files identical apart from {differing_lines} created_unix lines",
        a.len()
    ))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let scene = generate_scene(0, &TreeParams::default()).map_err(|e| e.to_string())?;
    let sb = scene.bounds();
    let c = sb.center();
    let half = 25.0 * sb.resolution;
    let bounds = RoiBounds::new(
        Point3::new(c.x - half, c.y - half, c.z - half),
        Point3::new(c.x + half, c.y + half, c.z + half),
        sb.resolution,
    )
    .map_err(|e| e.to_string())?;
    ensure(bounds.dims() == [50, 50, 50], || format!("dims {:?}", bounds.dims()))?;
    let settings = Settings::default();
    let cfg = settings.planner_config();
    let cam = settings.camera_model();
    let mut map = SemanticOctree::new(bounds, settings.fusion_params()).map_err(|e| e.to_string())?;
    let grid = settings.workspace().build().map_err(|e| e.to_string())?;
    let det = DetectorModel::default();
    let mut rng = rng_from_seed(8);
    let views = baseline_grid(sb, &cam, cfg.stand_off, cfg.overlap, &cfg.view_direction).map_err(|e| e.to_string())?;
    for v in views.iter().take(3) {
        let cloud = render_view(&scene, &v.pose, &cam, &det, &mut rng);
        map.insert_point_cloud(&v.pose.position, &cloud);
    }
    let current = views[0].pose;
    let ok = |_: &Viewpoint| true;
    let mut worst = Duration::ZERO;
    let mut counts = Vec::new();
    for mode in [NbvMode::Volumetric, NbvMode::Semantic] {
        for step in 0..3u64 {
            let mut probe = rng_from_seed(100 + step);
            let cands = generate_candidates(&map, &cfg, &cam, mode, &mut probe).map_err(|e| e.to_string())?;
            let feasible = filter_feasible(cands.clone(), &grid).len();
            counts.push((cands.len(), feasible));
            ensure(cands.len() <= 500, || format!("{mode:?} generated {} candidates", cands.len()))?;
            let mut srng = rng_from_seed(100 + step);
            let t = Instant::now();
            let pick = select_next_view(&map, &current, &cfg, &cam, mode, &grid, &ok, &mut srng)
                .map_err(|e| e.to_string())?;
            let el = t.elapsed();
            worst = worst.max(el);
            ensure(pick.is_some(), || format!("{mode:?} found no view"))?;
        }
    }
    within(worst, 1.0, "one selection step")?;
    Ok(format!(
        "50^3 ROI, {}x{} gain rays, (generated, feasible) candidates {counts:?}, slowest step {:.0} ms",
        cfg.ig_ray_cols,
        cfg.ig_ray_rows,
        worst.as_secs_f64() * 1e3
    ))
}

// ---------------------------------------------------------------- driver

fn main() -> ExitCode {
    let only: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let selected = |n: u32| only.is_empty() || only.iter().any(|a| a == &n.to_string());

    let dir = tempfile::tempdir().expect("temporary directory");
    let first = dir.path().join("first");
    let second = dir.path().join("second");

    type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;
    let checks: Vec<(u32, &str, Check)> = vec![
        (1, "fusion algebra", Box::new(criterion_1)),
        (2, "ray traversal exactness", Box::new(criterion_2)),
        (3, "gain oracle equivalence", Box::new(criterion_3)),
        (4, "baseline grid geometry", Box::new(criterion_4)),
        (5, "evaluation protocol", Box::new(criterion_5)),
        (6, "planner ordering", Box::new(|| criterion_6(&first))),
        (7, "reproducibility", Box::new(|| {
            if !first.join("summary.csv").exists() {
                return Err("needs the criterion 6 outputs".into());
            }
            criterion_7(&first, &second)
        })),
        (8, "selection throughput", Box::new(criterion_8)),
    ];

    let mut failed = 0;
    for (n, name, check) in &checks {
        if !selected(*n) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        match result {
            Ok(detail) => println!("criterion {n} ({name}): PASS - {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n} ({name}): FAIL - {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

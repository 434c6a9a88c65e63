//! Seeded multi-scene, multi-run planner comparisons.
//!
//! Every (scene, planner, run) episode is independent and runs on the rayon
//! pool. Each run's rng seed is `mix_seed([scene_seed, run_id, noise_seed])`,
//! so the planners see the same sensor noise stream for a given run. Outputs
//! are CSV files with a `# key: value` metadata header; `created_unix` is the
//! only field that changes between identical invocations.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::Settings;
use crate::error::{Error, Result};
use crate::eval::csv_io::{self, CurveRow, Metadata, TrialRow};
use crate::eval::{aggregate_grouped, Curves, TrialRecord};
use crate::map::SemanticOctree;
use crate::planner::{run_episode, EpisodeOutcome, PlannerMode, ReachabilityGrid};
use crate::rng::{mix_seed, rng_from_seed};
use crate::scene::{generate_scene, DetectorModel, SceneModel, ScenePreset, TreeParams};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// How per-run seeds are derived, recorded in every CSV header.
pub const SEED_DERIVATION: &str =
    "splitmix64 chain over (scene_seed, run_id, detector.noise_seed); planner excluded";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scene_seeds: Vec<u64>,
    pub runs_per_scene: u32,
    pub n_views: usize,
    pub planner_modes: Vec<PlannerMode>,
    pub output_dir: PathBuf,
    #[serde(default = "default_preset")]
    pub preset: ScenePreset,
    #[serde(default)]
    pub settings: Settings,
    #[serde(default)]
    pub detector: DetectorModel,
    /// Replaces the preset when present; unset keys take the orchard defaults.
    #[serde(default)]
    pub tree: Option<TreeParams>,
}

fn default_preset() -> ScenePreset {
    ScenePreset::Orchard
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scene_seeds.is_empty() {
            return Err(Error::Config("scene_seeds must not be empty".into()));
        }
        if self.runs_per_scene == 0 {
            return Err(Error::Config("runs_per_scene must be at least 1".into()));
        }
        if self.n_views == 0 {
            return Err(Error::Config("n_views must be at least 1".into()));
        }
        if self.planner_modes.is_empty() {
            return Err(Error::Config("planner_modes must not be empty".into()));
        }
        self.settings.validate()?;
        self.detector.validate()?;
        Ok(())
    }

    /// Hex sha256 of the canonical TOML form of this spec, ignoring
    /// `output_dir`.
    pub fn config_hash(&self) -> String {
        let mut s = self.clone();
        s.output_dir = PathBuf::new();
        let canonical = toml::to_string(&s).expect("spec serializes to toml");
        hex(&Sha256::digest(canonical.as_bytes()))
    }

    pub fn tree_params(&self) -> TreeParams {
        let mut p = self
            .tree
            .clone()
            .unwrap_or_else(|| TreeParams::preset(self.preset));
        p.resolution = self.settings.resolution;
        p
    }

    pub fn detector_model(&self) -> DetectorModel {
        self.settings.detector(&self.detector)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run_seed(scene_seed: u64, run_id: u32, noise_seed: u64) -> u64 {
    mix_seed(&[scene_seed, u64::from(run_id), noise_seed])
}

/// Seconds since the epoch, for the metadata header.
pub fn created_unix() -> String {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
        .to_string()
}

/// Everything needed to run one episode on a scene.
#[derive(Debug, Clone)]
pub struct RunRequest<'a> {
    pub scene: &'a SceneModel,
    pub mode: PlannerMode,
    pub settings: &'a Settings,
    pub detector: &'a DetectorModel,
    pub grid: &'a ReachabilityGrid,
    pub n_views: usize,
    pub seed: u64,
}

/// Run one episode on a fresh map. Returns the outcome and the final map.
pub fn run_single(req: &RunRequest<'_>) -> Result<(EpisodeOutcome, SemanticOctree)> {
    let mut map = SemanticOctree::new(*req.scene.bounds(), req.settings.fusion_params())?;
    let mut rng = rng_from_seed(req.seed);
    let outcome = run_episode(
        req.scene,
        &mut map,
        req.mode,
        req.n_views,
        &req.settings.episode_setup(),
        req.grid,
        req.detector,
        &mut rng,
    )?;
    Ok((outcome, map))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub planner: PlannerMode,
    pub n_views: usize,
    pub f1_mean: f64,
    pub f1_std: f64,
    pub coverage_mean: f64,
    pub coverage_std: f64,
    pub runs_completed: usize,
    pub runs_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub planner: PlannerMode,
    pub scene_seed: u64,
    pub run_id: u32,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    pub planner: PlannerMode,
    pub scene_seed: u64,
    pub run_id: u32,
    pub outcome: std::result::Result<Vec<TrialRecord>, String>,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub curves: Vec<Curves>,
    pub summary: Vec<SummaryRow>,
    pub failures: Vec<FailureRow>,
    pub episodes: Vec<EpisodeResult>,
}

pub fn episode_file_name(mode: PlannerMode, scene_seed: u64, run_id: u32) -> String {
    format!("{mode}_scene{scene_seed}_run{run_id}.csv")
}

fn base_metadata(spec: &ExperimentSpec, hash: &str, created: &str) -> Metadata {
    vec![
        ("artifact_version".into(), ARTIFACT_VERSION.into()),
        ("config_sha256".into(), hash.into()),
        ("seed_derivation".into(), SEED_DERIVATION.into()),
        (
            "scene_seeds".into(),
            spec.scene_seeds
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(" "),
        ),
        ("runs_per_scene".into(), spec.runs_per_scene.to_string()),
        ("n_views".into(), spec.n_views.to_string()),
        ("created_unix".into(), created.into()),
    ]
}

/// Run the full comparison and write every CSV under `spec.output_dir`.
///
/// A failing episode is recorded in `failures.csv` and left out of the
/// aggregates; it never prevents the other files from being written.
pub fn run_compare(spec: &ExperimentSpec) -> Result<CompareReport> {
    spec.validate()?;
    let settings = &spec.settings;
    let detector = spec.detector_model();
    let tree = spec.tree_params();
    let grid = settings.workspace().build()?;

    let scenes: Vec<(u64, Result<SceneModel>)> = spec
        .scene_seeds
        .par_iter()
        .map(|&s| (s, generate_scene(s, &tree)))
        .collect();

    let mut jobs = Vec::new();
    for (seed, _) in &scenes {
        for &mode in &spec.planner_modes {
            for run in 0..spec.runs_per_scene {
                jobs.push((*seed, mode, run));
            }
        }
    }

    let hash = spec.config_hash();
    let created = created_unix();
    let episode_dir = spec.output_dir.join("episodes");

    let episodes: Vec<EpisodeResult> = jobs
        .par_iter()
        .map(|&(scene_seed, mode, run_id)| {
            let scene = scenes
                .iter()
                .find(|(s, _)| *s == scene_seed)
                .map(|(_, r)| r)
                .expect("scene generated for every seed");
            let seed = run_seed(scene_seed, run_id, detector.noise_seed);
            let outcome = match scene {
                Ok(scene) => run_single(&RunRequest {
                    scene,
                    mode,
                    settings,
                    detector: &detector,
                    grid: &grid,
                    n_views: spec.n_views,
                    seed,
                })
                .map(|(o, _)| o.records)
                .and_then(|records| {
                    let rows: Vec<TrialRow> = records
                        .iter()
                        .map(|r| TrialRow::new(scene_seed, run_id, r))
                        .collect();
                    let mut meta = base_metadata(spec, &hash, &created);
                    meta.push(("planner".into(), mode.to_string()));
                    meta.push(("scene_seed".into(), scene_seed.to_string()));
                    meta.push(("run_id".into(), run_id.to_string()));
                    meta.push(("run_seed".into(), seed.to_string()));
                    csv_io::write_csv(
                        &episode_dir.join(episode_file_name(mode, scene_seed, run_id)),
                        &meta,
                        &rows,
                    )?;
                    Ok(records)
                })
                .map_err(|e| e.to_string()),
                Err(e) => Err(format!("scene generation failed: {e}")),
            };
            EpisodeResult {
                planner: mode,
                scene_seed,
                run_id,
                outcome,
            }
        })
        .collect();

    let mut failures = Vec::new();
    for ep in &episodes {
        if let Err(msg) = &ep.outcome {
            failures.push(FailureRow {
                planner: ep.planner,
                scene_seed: ep.scene_seed,
                run_id: ep.run_id,
                error: msg.clone(),
            });
        }
    }

    let mut curves = Vec::new();
    let mut summary = Vec::new();
    for &mode in &spec.planner_modes {
        let groups: Vec<Vec<Vec<TrialRecord>>> = spec
            .scene_seeds
            .iter()
            .map(|&s| {
                episodes
                    .iter()
                    .filter(|e| e.planner == mode && e.scene_seed == s)
                    .filter_map(|e| e.outcome.as_ref().ok().cloned())
                    .collect::<Vec<_>>()
            })
            .filter(|g| !g.is_empty())
            .collect();
        let failed = failures.iter().filter(|f| f.planner == mode).count();
        let completed: usize = groups.iter().map(Vec::len).sum();
        if groups.is_empty() {
            summary.push(SummaryRow {
                planner: mode,
                n_views: spec.n_views,
                f1_mean: 0.0,
                f1_std: 0.0,
                coverage_mean: 0.0,
                coverage_std: 0.0,
                runs_completed: 0,
                runs_failed: failed,
            });
            continue;
        }
        let c = aggregate_grouped(&groups)?;
        let last = c.last();
        summary.push(SummaryRow {
            planner: mode,
            n_views: spec.n_views,
            f1_mean: last.f1_mean,
            f1_std: last.f1_std,
            coverage_mean: last.coverage_mean,
            coverage_std: last.coverage_std,
            runs_completed: completed,
            runs_failed: failed,
        });
        let mut meta = base_metadata(spec, &hash, &created);
        meta.push(("planner".into(), mode.to_string()));
        meta.push(("aggregation".into(), "mean over scenes of per-scene mean/std".into()));
        let rows: Vec<CurveRow> = csv_io::curve_rows(&c);
        csv_io::write_csv(
            &spec.output_dir.join(format!("curves_{mode}.csv")),
            &meta,
            &rows,
        )?;
        curves.push(c);
    }

    let meta = base_metadata(spec, &hash, &created);
    csv_io::write_csv(&spec.output_dir.join("summary.csv"), &meta, &summary)?;
    let failures_path = spec.output_dir.join("failures.csv");
    if failures.is_empty() {
        if failures_path.exists() {
            std::fs::remove_file(&failures_path).map_err(|e| Error::io(&failures_path, e))?;
        }
    } else {
        csv_io::write_csv(&failures_path, &meta, &failures)?;
    }

    Ok(CompareReport {
        curves,
        summary,
        failures,
        episodes,
    })
}

//! `blight`: generate scenes, run planning episodes, compare planners and
//! inspect map snapshots.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use blight_core::config::Settings;
use blight_core::eval::csv_io::{self, TrialRow};
use blight_core::experiment::{self, ExperimentSpec, RunRequest};
use blight_core::map::snapshot;
use blight_core::planner::{PlannerMode, StopReason};
use blight_core::scene::{generate_scene, DetectorModel, SceneModel, ScenePreset, TreeParams};
use blight_core::ClassId;

#[derive(Parser)]
#[command(name = "blight", version, about = "Semantic next-best-view planning on simulated trees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a procedural tree scene and write it as JSON.
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Preset::Orchard)]
        preset: Preset,
        /// Voxel edge length, metres.
        #[arg(long)]
        resolution: Option<f64>,
        #[arg(long, default_value = "scene.json")]
        out: PathBuf,
    },
    /// Run one planning episode on a scene.
    Run(RunArgs),
    /// Run a full planner comparison from a TOML spec.
    Compare {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Print statistics of a saved map snapshot.
    InspectMap {
        #[arg(long)]
        map: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long, value_enum)]
    planner: Mode,
    /// Settings file (TOML); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 30)]
    views: usize,
    #[arg(long, default_value = "run_out")]
    out: PathBuf,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    camera_max_range: Option<f64>,
    #[arg(long)]
    background_confidence: Option<f64>,
    #[arg(long)]
    detection_confidence_threshold: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Orchard,
    Lab,
}

impl From<Preset> for ScenePreset {
    fn from(p: Preset) -> Self {
        match p {
            Preset::Orchard => ScenePreset::Orchard,
            Preset::Lab => ScenePreset::Lab,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Baseline,
    Volumetric,
    Semantic,
}

impl From<Mode> for PlannerMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Baseline => PlannerMode::Baseline,
            Mode::Volumetric => PlannerMode::Volumetric,
            Mode::Semantic => PlannerMode::Semantic,
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Generate {
            seed,
            preset,
            resolution,
            out,
        } => generate(seed, preset.into(), resolution, &out),
        Command::Run(args) => run(&args),
        Command::Compare { spec } => compare(&spec),
        Command::InspectMap { map } => inspect(&map),
    }
}

fn generate(
    seed: u64,
    preset: ScenePreset,
    resolution: Option<f64>,
    out: &Path,
) -> anyhow::Result<ExitCode> {
    let mut params = TreeParams::preset(preset);
    if let Some(r) = resolution {
        params.resolution = r;
    }
    let scene = generate_scene(seed, &params)?;
    scene
        .save(out)
        .with_context(|| format!("writing {}", out.display()))?;
    println!("wrote {}", out.display());
    println!(
        "shepherds_crook: {}",
        scene.count_class(ClassId::SHEPHERDS_CROOK)
    );
    println!("canker: {}", scene.count_class(ClassId::CANKER));
    Ok(ExitCode::SUCCESS)
}

fn load_settings(args: &RunArgs) -> anyhow::Result<Settings> {
    let mut s = match &args.config {
        Some(p) => Settings::load(p).with_context(|| format!("config {}", p.display()))?,
        None => Settings::default(),
    };
    if let Some(v) = args.alpha {
        s.alpha = v;
    }
    if let Some(v) = args.beta {
        s.beta = v;
    }
    if let Some(v) = args.camera_max_range {
        s.camera_max_range = v;
    }
    if let Some(v) = args.background_confidence {
        s.background_confidence = v;
    }
    if let Some(v) = args.detection_confidence_threshold {
        s.detection_confidence_threshold = v;
    }
    s.validate()?;
    Ok(s)
}

fn run(args: &RunArgs) -> anyhow::Result<ExitCode> {
    let settings = load_settings(args)?;
    let scene = SceneModel::load(&args.scene)
        .with_context(|| format!("scene {}", args.scene.display()))?;
    let mode: PlannerMode = args.planner.into();
    let detector = settings.detector(&DetectorModel::default());
    let grid = settings.workspace().build()?;
    let seed = experiment::run_seed(scene.seed(), 0, args.seed);
    let (outcome, map) = experiment::run_single(&RunRequest {
        scene: &scene,
        mode,
        settings: &settings,
        detector: &detector,
        grid: &grid,
        n_views: args.views,
        seed,
    })?;

    let rows: Vec<TrialRow> = outcome
        .records
        .iter()
        .map(|r| TrialRow::new(scene.seed(), 0, r))
        .collect();
    let meta = vec![
        ("artifact_version".into(), experiment::ARTIFACT_VERSION.into()),
        ("planner".into(), mode.to_string()),
        ("scene_seed".into(), scene.seed().to_string()),
        ("seed".into(), args.seed.to_string()),
        ("run_seed".into(), seed.to_string()),
        ("stop".into(), format!("{:?}", outcome.stop)),
    ];
    let csv_path = args.out.join("episode.csv");
    csv_io::write_csv(&csv_path, &meta, &rows)?;
    let map_path = args.out.join("map.bin");
    snapshot::save(&map, &map_path)?;

    if let Some(last) = outcome.records.last() {
        println!(
            "{mode}: {} views, f1 {:.4}, coverage {:.4}, elapsed {:.1} s",
            outcome.records.len(),
            last.f1,
            last.coverage,
            last.elapsed
        );
    }
    println!("wrote {} and {}", csv_path.display(), map_path.display());
    match outcome.stop {
        StopReason::Completed => Ok(ExitCode::SUCCESS),
        StopReason::GridExhausted => {
            println!(
                "note: baseline grid exhausted after {} of {} views",
                outcome.records.len(),
                args.views
            );
            Ok(ExitCode::SUCCESS)
        }
        StopReason::NoFeasibleView => {
            eprintln!(
                "no feasible next view after {} of {} views",
                outcome.records.len(),
                args.views
            );
            Ok(ExitCode::from(2))
        }
    }
}

fn compare(spec_path: &Path) -> anyhow::Result<ExitCode> {
    let spec = ExperimentSpec::load(spec_path)
        .with_context(|| format!("spec {}", spec_path.display()))?;
    let report = experiment::run_compare(&spec)?;
    for f in &report.failures {
        eprintln!(
            "warning: {} scene {} run {} failed: {}",
            f.planner, f.scene_seed, f.run_id, f.error
        );
    }
    println!(
        "{:<12} {:>10} {:>10} {:>12} {:>12} {:>6}",
        "planner", "f1_mean", "f1_std", "cov_mean", "cov_std", "runs"
    );
    for s in &report.summary {
        println!(
            "{:<12} {:>10.4} {:>10.4} {:>12.4} {:>12.4} {:>6}",
            s.planner.as_str(),
            s.f1_mean,
            s.f1_std,
            s.coverage_mean,
            s.coverage_std,
            s.runs_completed
        );
    }
    println!("outputs in {}", spec.output_dir.display());
    if report.summary.iter().all(|s| s.runs_completed == 0) {
        bail!("every episode failed");
    }
    Ok(ExitCode::SUCCESS)
}

fn inspect(path: &Path) -> anyhow::Result<ExitCode> {
    let map = snapshot::load(path).with_context(|| format!("map {}", path.display()))?;
    let s = snapshot::stats(&map);
    println!("dims: {} x {} x {}", s.dims[0], s.dims[1], s.dims[2]);
    println!("resolution: {}", s.resolution);
    println!("total_voxels: {}", s.total_voxels);
    println!("known_voxels: {}", s.known_voxels);
    println!("free_voxels: {}", s.free_voxels);
    println!("occupied_voxels: {}", s.occupied_voxels);
    println!("frontier_voxels: {}", s.frontier_voxels);
    println!("coverage: {:.6}", s.coverage);
    for (class, n) in &s.labelled_by_class {
        println!("labelled class {class}: {n}");
    }
    Ok(ExitCode::SUCCESS)
}

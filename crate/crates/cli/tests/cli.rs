//! Runs the `blight` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

fn blight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blight"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn count(out: &str, key: &str) -> usize {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} line in {out}"))
        .parse()
        .unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn generate(dir: &Path, name: &str, seed: &str, preset: &str) -> (std::path::PathBuf, Output) {
    let path = dir.join(name);
    let o = blight(&["generate", "--seed", seed, "--preset", preset, "--out", p(&path)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (path, o)
}

#[test]
fn generate_is_deterministic_and_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, out) = generate(dir.path(), "a.json", "7", "orchard");
    let (b, _) = generate(dir.path(), "b.json", "7", "orchard");
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    let text = stdout(&out);
    assert!((5..=8).contains(&count(&text, "shepherds_crook")));
    assert!((5..=8).contains(&count(&text, "canker")));

    let (_, lab) = generate(dir.path(), "lab.json", "0", "lab");
    let text = stdout(&lab);
    assert_eq!(count(&text, "shepherds_crook"), 6);
    assert_eq!(count(&text, "canker"), 0);
}

#[test]
fn run_is_reproducible_and_bounded_by_the_view_budget() {
    let dir = tempfile::tempdir().unwrap();
    let (scene, _) = generate(dir.path(), "scene.json", "1", "orchard");
    let mut csvs = Vec::new();
    for name in ["r1", "r2"] {
        let out = dir.path().join(name);
        let o = blight(&[
            "run", "--scene", p(&scene), "--planner", "semantic", "--seed", "4", "--views", "30", "--out", p(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join("map.bin").exists());
        csvs.push(std::fs::read_to_string(out.join("episode.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    let rows = csvs[0].lines().filter(|l| !l.starts_with('#')).count() - 1;
    assert!((1..=30).contains(&rows), "{rows} rows");

    let o = blight(&["inspect-map", "--map", p(&dir.path().join("r1").join("map.bin"))]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(count(&text, "occupied_voxels") > 0);
    assert!(text.contains("coverage: "));
}

#[test]
fn baseline_stops_with_a_note_when_the_grid_runs_out() {
    let dir = tempfile::tempdir().unwrap();
    let (scene, _) = generate(dir.path(), "lab.json", "3", "lab");
    let out = dir.path().join("out");
    let o = blight(&[
        "run", "--scene", p(&scene), "--planner", "baseline", "--views", "200", "--out", p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("note: baseline grid exhausted"));
    let csv = std::fs::read_to_string(out.join("episode.csv")).unwrap();
    assert!(csv.contains("# stop: GridExhausted"));
}

#[test]
fn unknown_config_key_is_named_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let (scene, _) = generate(dir.path(), "lab.json", "0", "lab");
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "alpha = 0.1\nstandoff_distance = 0.5\n").unwrap();
    let o = blight(&[
        "run", "--scene", p(&scene), "--planner", "semantic", "--config", p(&cfg), "--out", p(&dir.path().join("o")),
    ]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("standoff_distance"));

    let o = blight(&[
        "run", "--scene", p(&scene), "--planner", "semantic", "--beta", "1.5", "--out", p(&dir.path().join("o")),
    ]);
    assert!(!o.status.success());
}

#[test]
fn compare_writes_summary_and_episode_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cmp");
    let spec = dir.path().join("spec.toml");
    std::fs::write(
        &spec,
        format!(
            "scene_seeds = [0]\nruns_per_scene = 1\nn_views = 3\nplanner_modes = [\"baseline\", \"semantic\"]\noutput_dir = \"{}\"\npreset = \"lab\"\n",
            p(&out)
        ),
    )
    .unwrap();
    let o = blight(&["compare", "--spec", p(&spec)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("baseline") && text.contains("semantic"));
    for f in ["summary.csv", "curves_baseline.csv", "curves_semantic.csv", "episodes/semantic_scene0_run0.csv"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
}

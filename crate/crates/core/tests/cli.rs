use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fbmc_mimo::report::CurveTable;
use serde_json::Value;

const SMALL: &str = r#"
[fbmc]
L = 64
num_symbols = 24

[channel]
pdp = "exponential"
num_taps = 4

[array]
M = 8
K = 2
snr_in_db = 3.0

[run]
trials = 3
seed = 1
"#;

const SMALL_BLIND: &str = r#"
[fbmc]
L = 16
num_symbols = 40

[array]
M = 8
K = 1

[contamination]
num_cells = 3
beta = 0.3

[blind]
iterations = 100

[run]
trials = 2
"#;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fbmc-mimo"));
    cmd.env_remove("FBMC_MIMO_OUT");
    cmd
}

fn write_scenario(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn summary(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn listing(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn validate_accepts_good_and_rejects_bad_files() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write_scenario(tmp.path(), "good.scenario", SMALL);
    let out = run(&["validate", s(&good)]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "OK");

    let bad = write_scenario(tmp.path(), "bad.scenario", &SMALL.replace("L = 64", "L = 60"));
    let out = run(&["validate", s(&bad)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("fbmc.L"));

    let unknown = write_scenario(tmp.path(), "unknown.scenario", &format!("{SMALL}\n[fbmc2]\nx = 1\n"));
    assert_eq!(code(&run(&["validate", s(&unknown)])), 1);

    assert_eq!(code(&run(&["validate", s(&tmp.path().join("missing.scenario"))])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&[])), 1);
}

#[test]
fn shipped_scenarios_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    let mut count = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = run(&["validate", s(&path)]);
        assert_eq!(code(&out), 0, "{}: {}", path.display(), String::from_utf8_lossy(&out.stderr));
        count += 1;
    }
    assert!(count >= 3);
}

#[test]
fn run_writes_a_complete_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "small.scenario", SMALL);
    let out_dir = tmp.path().join("out");
    let out = run(&["run", s(&scenario), "--out", s(&out_dir), "--plot"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    assert_eq!(
        listing(&out_dir),
        ["sinr.svg", "sinr_mf.csv", "sinr_mmse.csv", "summary.json"]
    );
    for name in ["sinr_mf.csv", "sinr_mmse.csv"] {
        let text = fs::read_to_string(out_dir.join(name)).unwrap();
        let table = CurveTable::from_csv(&text).unwrap();
        assert_eq!(table.to_csv(), text);
        for stat in ["mean", "median"] {
            let rows: Vec<_> = table.rows.iter().filter(|r| r.trial_stat == stat).collect();
            assert_eq!(rows.len(), 64, "{name} {stat}");
            assert!(rows.iter().enumerate().all(|(i, r)| r.index == i));
        }
    }
    let svg = fs::read_to_string(out_dir.join("sinr.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));

    let json = summary(&out_dir);
    assert_eq!(json["kind"], "self_equalization");
    assert_eq!(json["scenario"]["run"]["trials"], 3);
    assert!(json["failures"].as_array().unwrap().is_empty());
    // the echoed scenario text parses back to the same run
    let echo = write_scenario(tmp.path(), "echo.scenario", json["scenario_file"].as_str().unwrap());
    assert_eq!(code(&run(&["validate", s(&echo)])), 0);
}

#[test]
fn seed_override_is_reproducible_and_matters() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "small.scenario", SMALL);
    let dirs: Vec<PathBuf> = ["a", "b", "c"].iter().map(|n| tmp.path().join(n)).collect();
    for (dir, seed) in dirs.iter().zip(["7", "7", "8"]) {
        assert_eq!(code(&run(&["run", s(&scenario), "--seed", seed, "--out", s(dir)])), 0);
    }
    let read = |d: &Path| fs::read(d.join("sinr_mmse.csv")).unwrap();
    assert_eq!(read(&dirs[0]), read(&dirs[1]));
    assert_ne!(read(&dirs[0]), read(&dirs[2]));
    assert_eq!(summary(&dirs[0])["scenario"]["run"]["seed"], 7);
    assert_eq!(code(&run(&["run", s(&scenario), "--seed", "-1"])), 1);
}

#[test]
fn output_directory_comes_from_the_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "small.scenario", SMALL);
    let target = tmp.path().join("from_env");
    let out = bin()
        .args(["run", s(&scenario)])
        .env("FBMC_MIMO_OUT", &target)
        .current_dir(tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert!(target.join("summary.json").is_file());
    assert!(!tmp.path().join("results").exists());
}

#[test]
fn sweep_writes_points_and_index() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "small.scenario", SMALL);
    let out_dir = tmp.path().join("sweep");
    let out = run(&["sweep", s(&scenario), "--axis", "M", "--values", "4,8", "--out", s(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(listing(&out_dir), ["point_000", "point_001", "sweep.json"]);
    let index: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(index["axis"], "M");
    assert_eq!(index["points"].as_array().unwrap().len(), 2);
    assert_eq!(summary(&out_dir.join("point_001"))["scenario"]["array"]["M"], 8);

    let neg = run(&["sweep", s(&scenario), "--axis", "snr_in_db", "--values", "-5,0", "--out", s(&tmp.path().join("snr"))]);
    assert_eq!(code(&neg), 0, "{}", String::from_utf8_lossy(&neg.stderr));

    assert_eq!(code(&run(&["sweep", s(&scenario), "--axis", "Q", "--values", "1"])), 1);
    assert_eq!(code(&run(&["sweep", s(&scenario), "--axis", "M", "--values", "2.5"])), 1);
    assert_eq!(code(&run(&["sweep", s(&scenario), "--axis", "beta", "--values", "0.1"])), 1);
}

#[test]
fn tracking_run_writes_trace_with_flat_baselines() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "blind.scenario", SMALL_BLIND);
    let out_dir = tmp.path().join("out");
    let out = run(&["run", s(&scenario), "--out", s(&out_dir), "--plot"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("tracking.svg").is_file());
    let table = CurveTable::from_csv(&fs::read_to_string(out_dir.join("tracking.csv")).unwrap()).unwrap();
    assert_eq!(table.index_column, "iteration");
    assert_eq!(table.extra_columns, ["mf_noisy_db", "mf_clean_db", "mmse_clean_db"]);
    assert_eq!(table.rows.len(), 100);
    for (i, row) in table.rows.iter().enumerate() {
        assert_eq!(row.index, i);
        assert_eq!(row.extra, table.rows[0].extra);
    }
    assert_eq!(summary(&out_dir)["kind"], "blind_tracking");
}

#[test]
fn divergence_exits_with_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let text = SMALL_BLIND.replace("iterations = 100", "iterations = 10\nstep_size = 200.0");
    let scenario = write_scenario(tmp.path(), "diverge.scenario", &text);
    let out_dir = tmp.path().join("out");
    let out = run(&["run", s(&scenario), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverge"));
    assert!(!out_dir.join("summary.json").exists());
}

#[test]
fn taps_prints_the_prototype() {
    let out = run(&["taps", "-L", "64"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let taps: Vec<f64> = text.lines().map(|l| l.trim().parse().unwrap()).collect();
    assert_eq!(taps.len(), 257);
    let energy: f64 = taps.iter().map(|t| t * t).sum();
    assert!((energy - 1.0).abs() < 1e-9);
    for i in 0..taps.len() {
        assert!((taps[i] - taps[taps.len() - 1 - i]).abs() < 1e-15);
    }
    assert_eq!(code(&run(&["taps", "-L", "60"])), 1);
}

#[test]
fn failed_write_leaves_no_partial_files() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = write_scenario(tmp.path(), "small.scenario", SMALL);
    let out_dir = tmp.path().join("out");
    // a directory squatting on one output name makes that rename fail
    fs::create_dir_all(out_dir.join("sinr_mmse.csv")).unwrap();
    let out = run(&["run", s(&scenario), "--out", s(&out_dir)]);
    assert_eq!(code(&out), 2);
    assert_eq!(listing(&out_dir), ["sinr_mmse.csv"]);

    let file = tmp.path().join("plain");
    fs::write(&file, "x").unwrap();
    assert_eq!(code(&run(&["run", s(&scenario), "--out", s(&file.join("sub"))])), 2);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn weylfold(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weylfold"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("WEYLFOLD_SEED")
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn algebra_reports_group_and_root_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = weylfold(&["algebra", "--family", "A", "--rank", "2"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("algebra_report.json"));
    assert_eq!(report["report"]["group_order"], 6);
    assert_eq!(report["report"]["positive_roots"], 3);
    assert_eq!(report["report"]["passed"], true);
    assert_eq!(report["meta"]["weylfold"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn algebra_dihedral_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = weylfold(&["algebra", "--family", "dihedral", "--m", "3"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = weylfold(&["algebra", "--bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(weylfold(&["algebra", "--family", "E", "--rank", "8"], dir.path()).status.code(), Some(2));
    assert_eq!(weylfold(&["algebra", "--family", "B", "--rank", "7"], dir.path()).status.code(), Some(2));
}

#[test]
fn walk_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        assert_eq!(weylfold(&["walk", "--steps", "200000", "--seed", "42"], dir.path()).status.code(), Some(0));
    }
    weylfold(&["walk", "--steps", "200000", "--seed", "43"], c.path());
    let read = |d: &tempfile::TempDir| fs::read(d.path().join("walk_transitions.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let csv = String::from_utf8(read(&a)).unwrap();
    assert!(csv.starts_with("# weylfold "));
    assert!(csv.lines().any(|l| l == "# seed=42"));
}

#[test]
fn short_walk_warns_without_failing() {
    let dir = tempfile::tempdir().unwrap();
    let out = weylfold(&["walk", "--steps", "100"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let summary = json(&dir.path().join("walk_summary.json"));
    assert!(!summary["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn flags_override_config_file_which_overrides_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# walk settings\nsteps=1000\nseed=5\n").unwrap();
    let seed_of = |d: &Path| json(&d.join("walk_summary.json"))["meta"]["config"]["seed"].clone();
    let steps_of = |d: &Path| json(&d.join("walk_summary.json"))["meta"]["config"]["steps"].clone();

    let from_file = dir.path().join("file");
    weylfold(&["walk", "--config", cfg.to_str().unwrap()], &from_file);
    assert_eq!(seed_of(&from_file), "5");
    assert_eq!(steps_of(&from_file), "1000");

    let from_flag = dir.path().join("flag");
    weylfold(&["walk", "--config", cfg.to_str().unwrap(), "--seed", "9"], &from_flag);
    assert_eq!(seed_of(&from_flag), "9");
    assert_eq!(steps_of(&from_flag), "1000");

    let from_env = dir.path().join("env");
    let status = Command::new(env!("CARGO_BIN_EXE_weylfold"))
        .args(["walk", "--steps", "1000", "--out"])
        .arg(&from_env)
        .env("WEYLFOLD_SEED", "77")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(seed_of(&from_env), "77");

    let file_beats_env = dir.path().join("file_env");
    Command::new(env!("CARGO_BIN_EXE_weylfold"))
        .args(["walk", "--config", cfg.to_str().unwrap(), "--out"])
        .arg(&file_beats_env)
        .env("WEYLFOLD_SEED", "77")
        .status()
        .unwrap();
    assert_eq!(seed_of(&file_beats_env), "5");
}

#[test]
fn bad_config_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "stepz=1000\n").unwrap();
    let out = weylfold(&["walk", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reflect_refuses_single_orbit_request() {
    let dir = tempfile::tempdir().unwrap();
    let out = weylfold(&["reflect", "--family", "dihedral", "--m", "3", "--orbit-check", "--paths", "2", "--dt", "1e-3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("there is only one orbit"));
}

#[test]
fn reflect_refuses_coarse_bandwidth() {
    let dir = tempfile::tempdir().unwrap();
    let out = weylfold(&["reflect", "--dt", "1e-3", "--eps", "0.01", "--paths", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reflect_writes_meta_then_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = weylfold(&["reflect", "--family", "dihedral", "--m", "4", "--dt", "1e-4", "--paths", "4", "--seed", "3"], dir.path());
    assert!(matches!(out.status.code(), Some(0) | Some(1)));
    let text = fs::read_to_string(dir.path().join("reflect_paths.jsonl")).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0]["meta"]["config"]["seed"], "3");
    let summary = fs::read_to_string(dir.path().join("reflect_summary.csv")).unwrap();
    assert!(summary.starts_with("# weylfold "));
}

#[test]
fn density_rejects_start_outside_chamber() {
    let dir = tempfile::tempdir().unwrap();
    let out = weylfold(&["density", "--family", "A", "--rank", "2", "--x0", "-1,0.5"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn density_check_c0_and_neumann() {
    let dir = tempfile::tempdir().unwrap();
    let out = weylfold(&["density", "--family", "dihedral", "--m", "4", "--check-c0"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("6.283"));
    let out = weylfold(&["density", "--family", "dihedral", "--m", "3", "--neumann"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn density_plot_references_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = weylfold(&["density", "--family", "rank1", "--paths", "100000", "--bins", "20", "--plot"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let script = fs::read_to_string(dir.path().join("density.gp")).unwrap();
    assert!(script.contains("density.csv"));
    let csv = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("y1,p_formula")));
}

//! End-to-end checks of the `birds` binary: artifacts, exit codes, and
//! byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn birds() -> Command {
    Command::new(env!("CARGO_BIN_EXE_birds"))
}

fn tmp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("birds-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn run_ok(args: &[&str]) -> Output {
    let out = birds().args(args).output().expect("binary runs");
    assert!(
        out.status.success(),
        "expected success for {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn run_writes_metrics_summary_and_chain() {
    let dir = tmp_dir("run");
    run_ok(&[
        "run",
        "--seed",
        "42",
        "--out",
        dir.to_str().unwrap(),
        "--dump-chain",
    ]);
    let metrics = read(&dir.join("metrics.csv"));
    assert!(metrics.starts_with("round,sim_time_s,engine,"));
    assert!(metrics.lines().count() > 300);
    let summary = read(&dir.join("summary.json"));
    assert!(summary.contains("\"chain_digest\""));
    let chain = read(&dir.join("chain.json"));
    assert!(chain.contains("\"blocks\""));
}

#[test]
fn identical_seeds_give_byte_identical_outputs() {
    let (d1, d2) = (tmp_dir("det1"), tmp_dir("det2"));
    run_ok(&["run", "--seed", "7", "--out", d1.to_str().unwrap()]);
    run_ok(&["run", "--seed", "7", "--out", d2.to_str().unwrap()]);
    assert_eq!(read(&d1.join("metrics.csv")), read(&d2.join("metrics.csv")));
    assert_eq!(
        read(&d1.join("summary.json")),
        read(&d2.join("summary.json"))
    );
}

#[test]
fn consensus_flag_overrides_engine() {
    let dir = tmp_dir("engine");
    run_ok(&["run", "--consensus", "pow", "--out", dir.to_str().unwrap()]);
    let metrics = read(&dir.join("metrics.csv"));
    assert!(metrics.lines().nth(2).unwrap().contains(",pow,"));
}

#[test]
fn scenario_file_is_honored() {
    let dir = tmp_dir("scenario");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("scenario.cfg");
    std::fs::write(&cfg, "uav_count = 5\njob_count = 3\n").unwrap();
    run_ok(&[
        "run",
        "--scenario",
        cfg.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    let summary = read(&dir.join("summary.json"));
    assert!(summary.contains("\"per_uav\""));
    let uavs = summary.matches("\"uav_id\"").count();
    assert_eq!(uavs, 5);
}

#[test]
fn bad_config_exits_2() {
    let dir = tmp_dir("badcfg");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.cfg");
    std::fs::write(&cfg, "uav_count = -1\n").unwrap();
    let out = birds()
        .args([
            "run",
            "--scenario",
            cfg.to_str().unwrap(),
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
}

#[test]
fn missing_scenario_file_exits_2() {
    let dir = tmp_dir("missing");
    let out = birds()
        .args([
            "run",
            "--scenario",
            "/nonexistent/birds.cfg",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tmp_dir("unwritable");
    std::fs::create_dir_all(&dir).unwrap();
    let blocker = dir.join("blocked");
    std::fs::write(&blocker, "a file, not a directory").unwrap();
    let out = birds()
        .args(["run", "--out", blocker.join("sub").to_str().unwrap()])
        .output()
        .expect("binary runs");
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_jobs_writes_expected_schema() {
    let dir = tmp_dir("sweepjobs");
    run_ok(&[
        "sweep",
        "jobs",
        "--seeds",
        "2",
        "--counts",
        "5,10",
        "--out",
        dir.to_str().unwrap(),
    ]);
    let csv = read(&dir.join("job_sweep.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("job_count,mean_edt_s,mean_adt_s"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn sweep_energy_covers_all_engines() {
    let dir = tmp_dir("sweepenergy");
    run_ok(&["sweep", "energy", "--out", dir.to_str().unwrap()]);
    let csv = read(&dir.join("energy_timeline.csv"));
    for kind in ["poc", "pow", "poid", "poa"] {
        assert!(csv.contains(&format!(",{kind},")), "missing engine {kind}");
    }
}

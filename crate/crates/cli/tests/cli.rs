use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn lab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sumtest-lab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("SUMTEST_LAB_CACHE")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["verify", "--T", "64", "--maxlen", "14"], dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let report = json(&dir.path().join("verify.json"));
    assert_eq!(report["status"], "pass");
    assert_eq!(report["machine"], "RPM-1");
    assert_eq!(report["summary"]["result"]["failed"], 0);
    assert!(dir.path().join("verify.checks.csv").exists());
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(lab(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(lab(&["mass"], dir.path()).status.code(), Some(2));
}

#[test]
fn omega_trace_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["omega-trace", "--T", "3"], dir.path());
    assert!(out.status.success());
    assert_eq!(
        fs::read_to_string(dir.path().join("omega-trace.trace.csv")).unwrap(),
        "t,omega,k_t\n0,1/2^2,2\n1,3/2^3,3\n2,7/2^4,4\n3,17/2^5,1\n"
    );
}

#[test]
fn failures_are_machine_readable() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&["tk", "1", "--T", "2"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let record: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(record["status"], "error");
    assert_eq!(record["kind"], "no-such-stage");
    assert_eq!(record["command"], "tk");
}

#[test]
fn reports_replay_from_embedded_config() {
    let first = tempfile::tempdir().unwrap();
    let out = lab(
        &["mass", "1", "--T", "5", "--maxlen", "12", "--alpha", "2"],
        first.path(),
    );
    assert!(out.status.success());
    let report = json(&first.path().join("mass.json"));
    assert_eq!(report["summary"]["result"]["mass"], "5/2^6");
    let cfg = &report["config"];
    let params = &report["summary"]["params"]["mass"];
    let args: Vec<String> = vec![
        "mass".into(),
        params["x"].as_str().unwrap().into(),
        "--T".into(),
        cfg["horizon"].to_string(),
        "--maxlen".into(),
        cfg["max_len"].to_string(),
        "--budget".into(),
        cfg["budget"].to_string(),
        "--alpha".into(),
        cfg["alpha"].to_string(),
        "--beta".into(),
        cfg["beta"].to_string(),
        "--numerals".into(),
        cfg["numerals"].as_str().unwrap().into(),
    ];
    let second = tempfile::tempdir().unwrap();
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert!(lab(&args, second.path()).status.success());
    assert_eq!(
        fs::read(first.path().join("mass.json")).unwrap(),
        fs::read(second.path().join("mass.json")).unwrap()
    );
}

#[test]
fn workers_and_cache_do_not_change_reports() {
    let base = ["verify", "--T", "64", "--maxlen", "14"];
    let runs = tempfile::tempdir().unwrap();
    let cache = runs.path().join("lab.cache");
    let cache = cache.to_str().unwrap();
    let variants: [&[&str]; 4] = [
        &["--workers", "1"],
        &["--workers", "8"],
        &["--cache", cache],
        &["--cache", cache, "--workers", "8"],
    ];
    let mut outputs = Vec::new();
    for (i, extra) in variants.iter().enumerate() {
        let dir = runs.path().join(i.to_string());
        let args: Vec<&str> = base.iter().chain(extra.iter()).copied().collect();
        assert!(lab(&args, &dir).status.success());
        outputs.push((
            fs::read(dir.join("verify.json")).unwrap(),
            fs::read(dir.join("verify.checks.csv")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));

    let stats = lab(
        &["cache", "stats", "--cache", cache],
        &runs.path().join("s"),
    );
    assert!(stats.status.success());
    let report: Value = serde_json::from_slice(&stats.stdout).unwrap();
    assert!(report["summary"]["stats"]["halt_records"].as_u64().unwrap() > 0);
    assert!(lab(
        &["cache", "compact", "--cache", cache],
        &runs.path().join("c")
    )
    .status
    .success());
}

#[test]
fn cache_version_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("old.cache");
    fs::write(&cache, "RPM-2 1\n").unwrap();
    let out = lab(
        &["mass", "0", "--cache", cache.to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let record: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(record["kind"], "cache");
}

#[test]
fn schedules_load_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("h.csv");
    fs::write(&table, "x,s,stage\n*,1,9\ndefault=2*s\n").unwrap();
    let args = ["uh", "0", "1", "--T", "8", "--maxlen", "12", "--schedule-h"];
    let from_file: Vec<&str> = args
        .iter()
        .copied()
        .chain([table.to_str().unwrap()])
        .collect();
    let out = lab(&from_file, dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let report = json(&dir.path().join("uh.json"));
    assert_eq!(
        report["summary"]["resolved"]["schedule_h"],
        "x,s,stage\n*,1,9\ndefault=(2*s)\n"
    );
    let csv = fs::read_to_string(dir.path().join("uh.values.csv")).unwrap();
    assert!(csv.starts_with("x,u_h\n0,"));
}

#[test]
fn dominate_reports_total_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(
        &[
            "dominate",
            "--probe-len",
            "3",
            "--T",
            "32",
            "--maxlen",
            "12",
            "--c",
            "1",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let table = fs::read_to_string(dir.path().join("dominate.h.csv")).unwrap();
    assert!(table.starts_with("x,s,stage\n"));
    assert!(table.ends_with("default=32\n"));
}

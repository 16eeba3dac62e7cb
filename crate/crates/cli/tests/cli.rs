use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cgauss(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgauss"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CGAUSS_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn verify_quick_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = cgauss(&["verify", "--quick"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 4);
    // hermetic: nothing written
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cgauss(&["frobnicate"], dir.path()).status.code(), Some(2));
    assert_eq!(cgauss(&["verify", "--bogus"], dir.path()).status.code(), Some(2));
    let out = cgauss(&["gaps", "--d", "8"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
    assert_eq!(cgauss(&["dyson"], dir.path()).status.code(), Some(2));
    assert_eq!(cgauss(&["dyson", "--d", "4"], dir.path()).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_one_with_structured_message() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "1,2\n3,4\n5,abc\n").unwrap();
    let out = cgauss(
        &[
            "mechanism",
            "--data",
            "bad.csv",
            "--k",
            "1",
            "--epsilon",
            "1",
            "--delta",
            "0.05",
            "--seed",
            "1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "parse");
    assert!(err["message"].as_str().unwrap().contains("row 3"));
}

#[test]
fn dyson_trajectory_csv_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "dyson", "--d", "6", "--beta", "2", "--dt", "1e-3", "--t-end", "0.2", "--seed", "3", "--out",
    ];
    let a = cgauss(&[&args[..], &["a.csv"]].concat(), dir.path());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    cgauss(&[&args[..], &["b.csv"]].concat(), dir.path());
    let body = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(body, fs::read_to_string(dir.path().join("b.csv")).unwrap());
    assert!(body.starts_with("t,gamma_1,gamma_2,gamma_3,gamma_4,gamma_5,gamma_6\n"));
    let manifest = json(&dir.path().join("a.manifest.json"));
    assert_eq!(manifest["master_seed"], 3);
}

#[test]
fn dyson_couple_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.json"), "[2.0, 1.0, 0.2, -1.5]").unwrap();
    fs::write(dir.path().join("x.json"), "[0, 0, 0, 0]").unwrap();
    let out = cgauss(
        &[
            "dyson", "couple", "--gamma0", "g.json", "--xi0", "x.json", "--dt", "1e-3", "--t-end", "0.1", "--seed",
            "5", "--out", "v.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&dir.path().join("v.json"));
    assert_eq!(v["payload"]["kind"], "other");
    assert!(v["payload"]["data"]["violations"]["comparisons"].as_u64().unwrap() > 0);
    assert_eq!(v["payload"]["data"]["initial_gaps_ordered"], true);
}

#[test]
fn mechanism_from_matrix_with_config_merge() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.csv"), "4,1,0\n1,3,0\n0,0,1\n").unwrap();
    fs::write(
        dir.path().join("cfg.json"),
        r#"{"k": 1, "epsilon": 1.0, "delta": 0.05, "seed": 9, "variant": "real"}"#,
    )
    .unwrap();
    // flags win over the config file
    let out = cgauss(
        &[
            "mechanism",
            "--config",
            "cfg.json",
            "--matrix",
            "m.csv",
            "--variant",
            "complex",
            "--out",
            "r.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&dir.path().join("r.json"));
    assert_eq!(r["manifest"]["master_seed"], 9);
    assert_eq!(r["payload"]["data"]["variant"], "complex");
    assert_eq!(r["payload"]["data"]["y"]["dim"], 3);
    assert_eq!(r["schema_version"], 1);
}

#[test]
fn gaps_writes_cdf_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = cgauss(
        &[
            "gaps",
            "--d",
            "8",
            "--n",
            "500",
            "--seed",
            "2",
            "--out",
            "g.json",
            "--cdf-out",
            "cdf.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(dir.path().join("cdf.csv"))
        .unwrap()
        .starts_with("s,p_hat,ci_lo,ci_hi\n"));
    assert_eq!(json(&dir.path().join("g.json"))["manifest"]["command"], "gaps");
}

#[test]
fn sweep_writes_json_and_csv_under_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("results");
    let out = Command::new(env!("CARGO_BIN_EXE_cgauss"))
        .args([
            "sweep",
            "--k",
            "1",
            "--dims",
            "4,8,16",
            "--epsilon",
            "1",
            "--delta",
            "0.05",
            "--reps",
            "5",
            "--seed",
            "11",
            "--out",
            "sweep.json",
        ])
        .current_dir(dir.path())
        .env("CGAUSS_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(target.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "d,rms_strong_complex,rms_strong_real,rms_weak_complex,rms_weak_real,bound_value"
    );
    assert_eq!(lines.count(), 3);
    assert_eq!(json(&target.join("sweep.json"))["payload"]["kind"], "sweep");
}

#[test]
fn dispatch_in_process() {
    assert_eq!(cgauss_cli::dispatch(["cgauss", "--version"]), 0);
    assert_eq!(cgauss_cli::dispatch(["cgauss", "nope"]), 2);
}

#[test]
fn closed_stdout_is_not_a_crash() {
    use std::io::Read;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_cgauss"))
        .args(["dyson", "--d", "40", "--dt", "1e-4", "--seed", "1"])
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut first = [0u8; 16];
    child.stdout.take().unwrap().read_exact(&mut first).unwrap();
    // reader dropped here
    let out = child.wait_with_output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stderr.is_empty());
}

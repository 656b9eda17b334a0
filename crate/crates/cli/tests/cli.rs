//! End-to-end checks of the `groupcast` binary: output conventions,
//! exit codes, and byte-level determinism of persisted files.

use std::path::Path;
use std::process::{Command, Output};

fn groupcast(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groupcast"))
        .args(args)
        .current_dir(dir)
        .env_remove("GROUPCAST_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn write_instance(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).expect("write instance");
    path.to_str().expect("utf-8 path").to_owned()
}

#[test]
fn bounds_prints_published_constants() {
    let dir = tempfile::tempdir().unwrap();
    let out = groupcast(&["bounds", "--model", "p1", "--M", "5", "--field", "real"], dir.path());
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["mu"].as_f64().unwrap() - 429.718).abs() < 5e-3);
    assert!((v["sigma"].as_f64().unwrap() - 0.0758).abs() < 5e-4);
}

#[test]
fn solve_p1_single_unit_channel_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(
        dir.path(),
        "e1.json",
        r#"{"model":"p1","field":"real","N":2,"M":1,"channels":[[1.0,0.0]]}"#,
    );
    let out = groupcast(&["solve-p1", &inst, "--trials", "20"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["ratio"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
}

#[test]
fn malformed_instance_exits_2_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(dir.path(), "bad.json", "{\"model\": 12}");
    let out = groupcast(&["solve-p1", &inst], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].is_string());

    // Structural violations also exit 2, with the findings listed.
    let inst = write_instance(
        dir.path(),
        "zero.json",
        r#"{"model":"p1","field":"real","N":2,"M":2,"channels":[[1.0,0.0],[0.0,0.0]]}"#,
    );
    let out = groupcast(&["solve-p1", &inst], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["detail"].to_string().contains("ZERO_CHANNEL"));
}

#[test]
fn experiment_reruns_are_byte_identical_across_threads() {
    let dir = tempfile::tempdir().unwrap();
    let args_base = [
        "experiment", "--model", "p1", "--M", "5", "--N", "4", "--field", "real",
        "--realizations", "10", "--trials", "100", "--seed", "7",
    ];
    let mut first = args_base.to_vec();
    first.extend(["--output-dir", "run1", "--threads", "1"]);
    let mut second = args_base.to_vec();
    second.extend(["--output-dir", "run2", "--threads", "3"]);
    let out1 = groupcast(&first, dir.path());
    let out2 = groupcast(&second, dir.path());
    assert!(out1.status.success(), "{}", String::from_utf8_lossy(&out1.stderr));
    assert!(out2.status.success(), "{}", String::from_utf8_lossy(&out2.stderr));
    for name in ["ratios.csv", "histogram.csv", "report.json"] {
        let a = std::fs::read(dir.path().join("run1").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("run2").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    assert_eq!(out1.stdout, out2.stdout);
}

#[test]
fn experiment_honors_output_dir_env_var() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_groupcast"))
        .args([
            "experiment", "--model", "p1", "--M", "2", "--N", "2", "--field", "real",
            "--realizations", "1", "--trials", "5", "--seed", "1",
        ])
        .current_dir(dir.path())
        .env("GROUPCAST_OUTPUT_DIR", dir.path().join("from-env"))
        .output()
        .expect("binary runs");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("from-env").join("ratios.csv").exists());
}

#[test]
fn generate_feeds_oracle_and_solve() {
    let dir = tempfile::tempdir().unwrap();
    let out = groupcast(
        &["generate", "--model", "p2", "--field", "complex", "--M", "2", "--N", "2",
          "--Q", "3", "--P", "2,1", "--seed", "9"],
        dir.path(),
    );
    assert!(out.status.success());
    let inst = write_instance(dir.path(), "gen.json", &String::from_utf8(out.stdout).unwrap());

    let solve = groupcast(&["solve-p2", &inst, "--trials", "200"], dir.path());
    assert!(solve.status.success(), "{}", String::from_utf8_lossy(&solve.stderr));
    let sv: serde_json::Value = serde_json::from_slice(&solve.stdout).unwrap();

    let oracle = groupcast(&["oracle", &inst, "--trials", "200"], dir.path());
    assert!(oracle.status.success(), "{}", String::from_utf8_lossy(&oracle.stderr));
    let ov: serde_json::Value = serde_json::from_slice(&oracle.stdout).unwrap();

    // The bracket is ordered and consistent with the end-to-end solve.
    let (lower, upper) = (ov["lower"].as_f64().unwrap(), ov["upper"].as_f64().unwrap());
    assert!(lower <= upper + 1e-9);
    assert!(sv["relaxation"]["objective"].as_f64().unwrap() <= lower + 1e-6);
    assert!(sv["rounded"]["objective"].as_f64().unwrap() >= lower - 1e-6);
}

#[test]
fn sdp_dump_is_written_and_parses() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_instance(
        dir.path(),
        "pair.json",
        r#"{"model":"p1","field":"real","N":2,"M":2,"channels":[[1.0,0.0],[0.0,1.0]]}"#,
    );
    let dump = dir.path().join("sdp.json");
    let out = groupcast(
        &["solve-p1", &inst, "--trials", "20", "--dump-sdp", dump.to_str().unwrap()],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!(v["block_dims"], serde_json::json!([2, 2]));
    assert_eq!(v["constraints"].as_array().unwrap().len(), 4);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rydlat::emit::read_csv;
use serde_json::Value;
use sha2::{Digest, Sha256};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn rydlat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydlat")).args(args).output().expect("spawn rydlat")
}

fn run_in(sub: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    rydlat(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&rydlat(&["no-such-command"])), 2);
    assert_eq!(code(&rydlat(&["bbr"])), 2);
    assert_eq!(code(&rydlat(&["bbr", "--config", "x.json", "--threads", "0"])), 2);
    assert_eq!(code(&rydlat(&["--help"])), 0);
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let node = config("node_resonant.json");
    let o = run_in("bbr", &node, dir.path(), &["--set", "params.gamma_p_over_2pi_hz=-1"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("gamma_p"));

    let o = run_in("bbr", &node, dir.path(), &["--set", "params.delta_over_2pi_hz=\"5 MHz\""]);
    assert_eq!(code(&o), 3);

    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&node).unwrap()).unwrap();
    doc["params"]["colour"] = Value::from(1);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, doc.to_string()).unwrap();
    assert_eq!(code(&run_in("bbr", &bad, dir.path(), &[])), 3);

    assert_eq!(code(&run_in("bbr", &dir.path().join("missing.json"), dir.path(), &[])), 3);
}

#[test]
fn repulsive_ground_state_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in("ground-state", &config("node_resonant.json"), dir.path(), &["--set", "ground_state.grid_points=32"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn unwritable_output_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("occupied");
    fs::write(&file, b"").unwrap();
    assert_eq!(code(&run_in("bbr", &config("node_resonant.json"), &file, &[])), 5);
}

#[test]
fn bbr_table_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in("bbr", &config("node_resonant.json"), dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows, meta) = read_csv(&fs::read_to_string(dir.path().join("bbr.csv")).unwrap()).unwrap();
    assert_eq!(header, ["temperature_k", "p_r", "tau_max_s"]);
    assert_eq!(rows.len(), 3);
    let tau: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    assert!(((tau[0] / tau[1]) / (500.0 / 1960.0) - 1.0).abs() < 1e-15);
    assert!(((tau[0] / tau[2]) / (17.0 / 1960.0) - 1.0).abs() < 1e-15);
    assert_eq!(meta["scenario"]["seed"], 7);

    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("bbr.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "bbr");
    let files = manifest["files"].as_array().unwrap();
    assert!(!files.is_empty());
    for f in files {
        let bytes = fs::read(dir.path().join(f["path"].as_str().unwrap())).unwrap();
        assert_eq!(f["bytes"], bytes.len());
        assert_eq!(f["sha256"].as_str().unwrap(), format!("{:x}", Sha256::digest(&bytes)));
    }
    let cfg_bytes = fs::read(config("node_resonant.json")).unwrap();
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap(), format!("{:x}", Sha256::digest(&cfg_bytes)));
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = config("node_resonant.json");
    let set = ["--set", "potential_scan.points=24", "--set", "potential_scan.position_points=25"];
    for (dir, threads) in [(&a, "1"), (&b, "3")] {
        let mut extra = set.to_vec();
        extra.extend(["--threads", threads]);
        let o = run_in("potential-scan", &cfg, dir.path(), &extra);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 3);
    for n in names {
        assert_eq!(fs::read(a.path().join(&n)).unwrap(), fs::read(b.path().join(&n)).unwrap(), "{n:?}");
    }
}

/// Structural equality with numbers compared as f64.
fn same(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(p, q)| same(p, q)),
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| same(v, w)))
        }
        _ => a == b,
    }
}

#[test]
fn explicit_config_round_trips_through_the_snapshot() {
    for name in ["node_resonant.json", "trap.json"] {
        let path = config(name);
        let file: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let scenario = rydlat::parse_config(&path, &[]).unwrap();
        assert!(same(&scenario.snapshot(), &file), "{name}");
    }
}

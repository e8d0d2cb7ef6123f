use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use partprune::io::{read_matrix, ResultFile};
use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_partprune")).current_dir(dir).args(args).output().unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    run(dir, args).status.code().unwrap()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn gen_uniform_6x8() {
    let dir = TempDir::new().unwrap();
    let out = ok(dir.path(), &["--json", "gen", "--rows", "6", "--cols", "8", "--dist", "uniform", "--out", "w.bin"]);
    assert_eq!(json(&out)["connectedness_full"], 48);
    let bytes = fs::read(dir.path().join("w.bin")).unwrap();
    assert_eq!(bytes.len(), 16 + 48 * 4);
    let w = read_matrix(&dir.path().join("w.bin")).unwrap();
    assert_eq!((w.rows(), w.cols()), (6, 8));
}

#[test]
fn gen_blockdiag_zeros_off_block() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["gen", "--rows", "8", "--cols", "8", "--dist", "blockdiag:2", "--out", "w.csv"]);
    let w = read_matrix(&dir.path().join("w.csv")).unwrap();
    for i in 0..8 {
        for j in 0..8 {
            assert_eq!(w.get(i, j) == 0.0, (i < 4) != (j < 4));
        }
    }
}

#[test]
fn gen_same_seed_same_bytes() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["--seed", "4", "gen", "--rows", "9", "--cols", "5", "--dist", "gauss", "--out", "a.bin"]);
    ok(dir.path(), &["--seed", "4", "gen", "--rows", "9", "--cols", "5", "--dist", "gauss", "--out", "b.bin"]);
    ok(dir.path(), &["--seed", "5", "gen", "--rows", "9", "--cols", "5", "--dist", "gauss", "--out", "c.bin"]);
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    assert_eq!(read("a.bin"), read("b.bin"));
    assert_ne!(read("a.bin"), read("c.bin"));
}

#[test]
fn prune_reports_ratio() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--rows", "6", "--cols", "8", "--out", "w.bin"]);
    let text = ok(d, &["prune", "--input", "w.bin", "-p", "2", "--out", "r.json"]);
    assert!(text.contains("ratio 0.5\n"), "{text}");
    assert!(text.contains("shapes 3x4 3x4"), "{text}");
    let r = ResultFile::read(&d.join("r.json")).unwrap();
    assert_eq!((r.rows, r.cols, r.p, r.restarts, r.connectedness), (6, 8, 2, 32, 24));
    assert!(!r.refined);

    let text = ok(d, &["prune", "--input", "w.bin", "-p", "1", "--out", "r1.json"]);
    assert!(text.contains("ratio 1\n") && text.contains("weight_loss 0\n"), "{text}");

    ok(d, &["gen", "--rows", "10", "--cols", "15", "--out", "v.bin"]);
    let text = ok(d, &["--json", "prune", "--input", "v.bin", "-p", "5", "--refine", "--out", "r5.json"]);
    assert_eq!(json(&text)["ratio"], 0.2);
    assert_eq!(json(&text)["refined"], true);
}

#[test]
fn result_file_field_order() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--rows", "4", "--cols", "4", "--out", "w.bin"]);
    ok(d, &["--quiet", "prune", "--input", "w.bin", "-p", "2", "--out", "r.json"]);
    let text = fs::read_to_string(d.join("r.json")).unwrap();
    let keys: Vec<&str> = text
        .lines()
        .filter_map(|l| l.strip_prefix("  \"").and_then(|l| l.split('"').next()))
        .collect();
    assert_eq!(keys, [
        "rows",
        "cols",
        "p",
        "seed",
        "restarts",
        "row_partition",
        "col_partition",
        "weight_loss",
        "retained_abs_weight",
        "connectedness",
        "ratio",
        "refined"
    ]);
}

#[test]
fn prune_rejects_bad_input() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.csv"), "1,2\n3\n").unwrap();
    assert_eq!(code(d, &["prune", "--input", "bad.csv", "-p", "1", "--out", "r.json"]), 2);
    fs::write(d.join("w.csv"), "1,2\n3,4\n").unwrap();
    assert_eq!(code(d, &["prune", "--input", "w.csv", "-p", "3", "--out", "r.json"]), 2);
    assert_eq!(code(d, &["prune", "--input", "missing.bin", "-p", "1", "--out", "r.json"]), 1);
    assert_eq!(code(d, &["prune", "--input", "w.csv"]), 2);
}

#[test]
fn oracle_hand_example() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("w.csv"), "4,3\n2,1\n").unwrap();
    let out = json(&ok(d, &["--json", "oracle", "--input", "w.csv", "-p", "2"]));
    assert_eq!(out["optimum_loss"], 5.0);
    assert_eq!(out["greedy_loss"], Value::Null);
}

#[test]
fn oracle_planted_gap_zero() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--rows", "8", "--cols", "8", "--dist", "blockdiag:2", "--out", "w.bin"]);
    ok(d, &["prune", "--input", "w.bin", "-p", "2", "--out", "r.json"]);
    ok(d, &["oracle", "--input", "w.bin", "-p", "2", "--result", "r.json", "--out", "o.json"]);
    let o: Value = serde_json::from_slice(&fs::read(d.join("o.json")).unwrap()).unwrap();
    assert_eq!(o["optimum_loss"], 0.0);
    assert_eq!(o["gap"], 0.0);
}

#[test]
fn oracle_gap_non_negative() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for seed in ["1", "2", "3"] {
        ok(d, &["--seed", seed, "gen", "--rows", "6", "--cols", "6", "--out", "w.bin"]);
        ok(d, &["--seed", seed, "prune", "--input", "w.bin", "-p", "2", "--restarts", "2", "--out", "r.json"]);
        let out = json(&ok(d, &["--json", "oracle", "--input", "w.bin", "-p", "2", "--result", "r.json"]));
        assert!(out["gap"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn oracle_budget_exit_code() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--rows", "30", "--cols", "30", "--out", "w.bin"]);
    let out = run(d, &["oracle", "--input", "w.bin", "-p", "3"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("estimated"));
}

#[test]
fn verify_pass_and_tamper() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--rows", "12", "--cols", "9", "--dist", "gauss", "--out", "w.bin"]);
    ok(d, &["prune", "--input", "w.bin", "-p", "3", "--out", "r.json"]);
    let text = ok(d, &["verify", "--input", "w.bin", "--result", "r.json", "--out", "v.json"]);
    assert!(text.starts_with("PASS"), "{text}");
    let v: Value = serde_json::from_slice(&fs::read(d.join("v.json")).unwrap()).unwrap();
    assert!(v["max_rel_err"].as_f64().unwrap() <= 1e-5);

    let mut r = ResultFile::read(&d.join("r.json")).unwrap();
    let first = r.row_partition[0];
    let other = r.row_partition.iter().position(|&k| k != first).unwrap();
    r.row_partition[other] = first;
    r.write(&d.join("t.json")).unwrap();
    let out = run(d, &["verify", "--input", "w.bin", "--result", "t.json"]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("FAIL") && text.contains("bound"), "{text}");

    ok(d, &["prune", "--input", "w.bin", "-p", "1", "--out", "r1.json"]);
    let out = json(&ok(d, &["--json", "verify", "--input", "w.bin", "--result", "r1.json"]));
    assert_eq!(out["passed"], true);
    assert_eq!(out["max_rel_err"], 0.0);
}

#[test]
fn verify_dimension_mismatch() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["gen", "--rows", "6", "--cols", "6", "--out", "a.bin"]);
    ok(d, &["gen", "--rows", "7", "--cols", "6", "--out", "b.bin"]);
    ok(d, &["prune", "--input", "a.bin", "-p", "2", "--out", "r.json"]);
    assert_eq!(code(d, &["verify", "--input", "b.bin", "--result", "r.json"]), 2);
}

#[test]
fn simulate_p1_is_baseline() {
    let dir = TempDir::new().unwrap();
    let out = json(&ok(dir.path(), &["--json", "simulate", "--rows", "512", "--cols", "512", "--batch", "64", "--baseline"]));
    assert_eq!(out["speedup"], 1.0);
    assert_eq!(out["energy_ratio"], 1.0);
    assert!(out["baseline"].is_object());
    let out = json(&ok(dir.path(), &["--json", "simulate", "-p", "2"]));
    assert!(out["baseline"].is_null());
    assert!(out["speedup"].as_f64().unwrap() > 2.0);
}

#[test]
fn simulate_rejects_bad_config() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("c.json"), r#"{"sa_dim": 0}"#).unwrap();
    assert_eq!(code(d, &["simulate", "--config", "c.json"]), 2);
    fs::write(d.join("c.json"), r#"{"typo": 1}"#).unwrap();
    assert_eq!(code(d, &["simulate", "--config", "c.json"]), 2);
    fs::write(d.join("c.json"), r#"{"contention_overhead": 0.5}"#).unwrap();
    ok(d, &["simulate", "--config", "c.json", "-p", "2"]);
}

#[test]
fn calibrate_writes_config() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let text = ok(d, &["calibrate", "--out", "cal.json"]);
    assert!(text.contains("2 accelerators: target 1.8"), "{text}");
    let cal: Value = serde_json::from_slice(&fs::read(d.join("cal.json")).unwrap()).unwrap();
    assert!(cal["dma_fixed_overhead_cycles"].as_f64().unwrap() > 0.0);

    // Superlinear scaling is out of reach; the best fit is still written.
    let out = run(d, &["calibrate", "--targets", "2:2.5", "--out", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(d.join("bad.json").exists());
    assert_eq!(code(d, &["calibrate", "--targets", "2-1.8", "--out", "x.json"]), 2);
}

#[test]
fn quiet_prints_nothing() {
    let dir = TempDir::new().unwrap();
    let out = ok(dir.path(), &["--quiet", "gen", "--rows", "3", "--cols", "3", "--out", "w.bin"]);
    assert!(out.is_empty());
}

#[test]
fn help_mentions_zero_based() {
    let out = Command::new(env!("CARGO_BIN_EXE_partprune")).arg("--help").output().unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("0-based"));
}

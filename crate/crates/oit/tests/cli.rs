//! End-to-end tests against the compiled binary: exit codes, report shapes,
//! byte stability, and cache behavior across processes.

use std::process::Command;

fn oit() -> Command {
    Command::new(env!("CARGO_BIN_EXE_oit"))
}

#[test]
fn analyze_example_curve() {
    let out = oit()
        .args(["analyze", "--a", "1", "--b", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["schema"], "oit/1");
    assert_eq!(v["disc_core"], "31");
    assert_eq!(v["n"], "62");
    assert_eq!(v["omega"], 2);
    assert_eq!(v["j"], "6912/31");
    assert!((v["height_j"].as_f64().unwrap() - 8.8410143).abs() < 1e-6);
}

#[test]
fn analyze_negative_coefficients() {
    let out = oit()
        .args(["analyze", "--a", "-2", "--b", "3"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["disc_core"], "211");
    assert_eq!(v["bad_primes"], serde_json::json!([2, 211]));
}

#[test]
fn reports_are_byte_stable_across_processes() {
    let first = oit()
        .args(["analyze", "--a", "7", "--b", "-11"])
        .output()
        .unwrap();
    let second = oit()
        .args(["analyze", "--a", "7", "--b", "-11"])
        .output()
        .unwrap();
    assert_eq!(first.stdout, second.stdout);

    let dir = tempfile::tempdir().unwrap();
    let run = || {
        oit()
            .args([
                "--cache-dir",
                dir.path().to_str().unwrap(),
                "average",
                "--A",
                "50",
                "--B",
                "50",
                "--r",
                "1",
                "--x",
                "200",
                "--sample",
                "5",
                "--seed",
                "99",
            ])
            .output()
            .unwrap()
    };
    assert_eq!(run().stdout, run().stdout);
}

#[test]
fn bound_pipeline_end_to_end() {
    let out = oit()
        .args(["bound", "--a", "1", "--b", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["m"], "6");
    assert_eq!(v["steps"].as_array().unwrap().len(), 2);
    assert_eq!(v["index_bounds"]["remark_modulus"], 18888870);
}

#[test]
fn surjectivity_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = oit()
        .args([
            "--cache-dir",
            dir.path().to_str().unwrap(),
            "surjectivity",
            "--a",
            "1",
            "--b",
            "1",
            "--ell",
            "5",
            "--x",
            "1000",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["status"], "surjective");
    assert_eq!(v["witnesses"].as_array().unwrap().len(), 3);
    // The run must have warmed the per-curve cache file.
    let cache = std::fs::read_to_string(dir.path().join("a=1,b=1.ap")).unwrap();
    assert!(cache.starts_with("3,0\n5,-3\n7,3\n"));
}

#[test]
fn exit_codes() {
    // Singular curve: domain error.
    let out = oit()
        .args(["analyze", "--a", "0", "--b", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    // Unknown flag: usage error.
    let out = oit()
        .args(["analyze", "--a", "1", "--b", "1", "--frob"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Unknown subcommand: usage error.
    let out = oit().args(["transmogrify"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // Help is not an error.
    let out = oit().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn corrupt_cache_quarantined_not_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a=1,b=1.ap"), "5,99\n").unwrap();
    let out = oit()
        .args([
            "--cache-dir",
            dir.path().to_str().unwrap(),
            "lt-count",
            "--a",
            "1",
            "--b",
            "1",
            "--r",
            "3",
            "--x",
            "10",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Hasse"), "stderr: {stderr}");
    assert!(dir.path().join("a=1,b=1.ap.quarantined").exists());
    assert!(!dir.path().join("a=1,b=1.ap").exists());
}

#[test]
fn warm_cache_reused_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--cache-dir",
        dir.path().to_str().unwrap(),
        "lt-count",
        "--a",
        "2",
        "--b",
        "3",
        "--r",
        "0",
        "--x",
        "50",
    ];
    let first = oit().args(args).output().unwrap();
    assert_eq!(first.status.code(), Some(0));
    let file = dir.path().join("a=2,b=3.ap");
    let written = std::fs::read_to_string(&file).unwrap();
    let before = std::fs::metadata(&file).unwrap().modified().unwrap();
    let second = oit().args(args).output().unwrap();
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(std::fs::read_to_string(&file).unwrap(), written);
    // No rewrite happened on the warm run.
    assert_eq!(
        std::fs::metadata(&file).unwrap().modified().unwrap(),
        before
    );
}

#[test]
fn lt_constant_command() {
    let out = oit()
        .args(["lt-constant", "--r", "1", "--cutoff", "1000"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let value = v["value"].as_f64().unwrap();
    assert!(value > 0.35 && value < 0.45, "C_1 near 0.3916, got {value}");
    assert!(v["tail_bound"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_group_theory_exit_zero() {
    let out = oit()
        .args([
            "verify",
            "group-theory",
            "--ell",
            "3",
            "--level",
            "2",
            "--seed",
            "1",
        ])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "report: {v}");
    assert_eq!(v["failed"], 0);
    assert!(v["passed"].as_u64().unwrap() > 5);
}

//! End-to-end tests of the `qqlab` binary: the synth → simulate →
//! reconstruct pipeline through the file layer, determinism, and exit
//! codes.

use std::path::Path;
use std::process::{Command, Output};

fn qqlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qqlab"))
        .args(args)
        .env("QQLAB_OUTPUT_DIR", dir)
        .output()
        .expect("binary runs")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
}

#[test]
fn synth_simulate_reconstruct_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let out = qqlab(
        dir.path(),
        &[
            "synth", "--c1", "0.35,0.2", "--b-plus", "0.5,0", "--c4", "0.45,-0.25", "--b-minus",
            "0.4,0.3", "--renormalize",
        ],
    );
    assert_code(&out, 0);
    assert!(dir.path().join("state.json").exists());

    // exact mode (n_total = 0) through the same pipeline
    let state = dir.path().join("state.json");
    let out = qqlab(
        dir.path(),
        &["simulate", "--state", state.to_str().unwrap(), "--n-total", "0"],
    );
    assert_code(&out, 0);
    let records = dir.path().join("records");
    assert_eq!(std::fs::read_dir(&records).unwrap().count(), 6);

    let out = qqlab(dir.path(), &["reconstruct", records.to_str().unwrap()]);
    assert_code(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("scenario: general"), "{text}");

    let estimate: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("estimate.json")).unwrap())
            .unwrap();
    let norm = 0.35_f64.hypot(0.2).hypot(0.5).hypot(0.45_f64.hypot(0.25)).hypot(0.4_f64.hypot(0.3));
    let mps = &estimate["mps"];
    for (key, expected) in [
        ("abs_c1", 0.35_f64.hypot(0.2) / norm),
        ("abs_c4", 0.45_f64.hypot(0.25) / norm),
        ("b_plus", 0.5 / norm),
        ("abs_b_minus", 0.4_f64.hypot(0.3) / norm),
    ] {
        let got = mps[key].as_f64().unwrap();
        assert!(
            (got - expected).abs() < 1e-6,
            "{key}: {got} vs {expected}"
        );
    }
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = qqlab(dir.path(), &["synth", "--random", "--seed", "5"]);
    assert_code(&out, 0);
    let state = dir.path().join("state.json");
    for sub in ["a", "b"] {
        let out = qqlab(
            dir.path(),
            &[
                "simulate",
                "--state",
                state.to_str().unwrap(),
                "--n-total",
                "10000",
                "--seed-base",
                "3",
                "--out",
                dir.path().join(sub).to_str().unwrap(),
            ],
        );
        assert_code(&out, 0);
    }
    for i in 0..6 {
        let name = format!("record_{i:02}.csv");
        assert_eq!(
            std::fs::read(dir.path().join("a").join(&name)).unwrap(),
            std::fs::read(dir.path().join("b").join(&name)).unwrap(),
            "{name} differs between reruns"
        );
    }
}

#[test]
fn analyze_compare_and_sweep() {
    let dir = tempfile::tempdir().unwrap();
    // two-Bell showcase state: K = 2 in the mixed picture, 1 in the rival
    let out = qqlab(
        dir.path(),
        &[
            "synth", "--c1", "0,0", "--b-plus", "0.70710678118654752,0", "--c4", "0,0",
            "--b-minus", "0.70710678118654752,0",
        ],
    );
    assert_code(&out, 0);
    let state = dir.path().join("state.json");

    let out = qqlab(dir.path(), &["compare", state.to_str().unwrap()]);
    assert_code(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("two-qubit model"), "{text}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert!((report["k_bar"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    assert!((report["k_2qb"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let out = qqlab(dir.path(), &["sweep", "--range", "0:1:5"]);
    assert_code(&out, 0);
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "b_minus_sq,k_bar,c_bar,s_rel");
    assert_eq!(lines.len(), 6);
    for line in &lines[1..] {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert!(fields[3] <= fields[2] + 1e-9, "S_rel above concurrence: {line}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // validation error: unnormalized state
    let out = qqlab(
        dir.path(),
        &["synth", "--c1", "1,0", "--b-plus", "1,0", "--c4", "0,0", "--b-minus", "0,0"],
    );
    assert_code(&out, 2);

    // missing records: only the HV log present
    let out = qqlab(dir.path(), &["synth", "--random", "--seed", "1"]);
    assert_code(&out, 0);
    let state = dir.path().join("state.json");
    let out = qqlab(
        dir.path(),
        &["simulate", "--state", state.to_str().unwrap(), "--n-total", "0"],
    );
    assert_code(&out, 0);
    let partial = dir.path().join("partial");
    std::fs::create_dir(&partial).unwrap();
    std::fs::copy(
        dir.path().join("records/record_00.csv"),
        partial.join("record_00.csv"),
    )
    .unwrap();
    let out = qqlab(dir.path(), &["reconstruct", partial.to_str().unwrap()]);
    assert_code(&out, 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing records"));

    // usage error from the parser
    let out = qqlab(dir.path(), &["frobnicate"]);
    assert_code(&out, 2);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn qca(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qca"))
        .args(args)
        .output()
        .expect("qca runs")
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn amplitudes(v: &Value) -> Vec<(f64, f64)> {
    v["register"]["amplitudes"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| (p[0].as_f64().unwrap(), p[1].as_f64().unwrap()))
        .collect()
}

fn overlap(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (&(ar, ai), &(br, bi)) in a.iter().zip(b) {
        re += ar * br + ai * bi;
        im += ar * bi - ai * br;
    }
    (re * re + im * im).sqrt()
}

#[test]
fn tau_dump_is_a_deterministic_unitary() {
    let first = qca(&["tau"]);
    assert!(first.status.success());
    let text = String::from_utf8(first.stdout.clone()).unwrap();
    let rows: Vec<Vec<(f64, f64)>> = text
        .lines()
        .map(|line| {
            line.split_whitespace()
                .map(|entry| {
                    let (re, im) = entry.split_once(',').unwrap();
                    (re.parse().unwrap(), im.parse().unwrap())
                })
                .collect()
        })
        .collect();
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.len() == 16));
    for i in 0..16 {
        for j in 0..16 {
            // (U^dagger U)_{ij} = sum_k conj(U_ki) U_kj
            let (mut re, mut im) = (0.0, 0.0);
            for row in &rows {
                let (ar, ai) = row[i];
                let (br, bi) = row[j];
                re += ar * br + ai * bi;
                im += ar * bi - ai * br;
            }
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((re - want).abs() < 1e-12 && im.abs() < 1e-12, "({i},{j})");
        }
    }
    assert_eq!(qca(&["tau"]).stdout, first.stdout);
}

#[test]
fn empty_circuit_compiles_to_one_idle_window() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(&dir, "c.json", r#"{"rows": 2, "gates": []}"#);
    let out = qca(&["compile", circuit.to_str().unwrap()]);
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["s"], 1);
    assert_eq!(v["r"], 20);
    let columns = v["columns"].as_array().unwrap();
    assert_eq!(columns.len(), 20);
    assert!(columns.iter().all(|c| c == "00"));
}

#[test]
fn phase_gate_sets_first_column_row_zero() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(
        &dir,
        "c.json",
        r#"{"rows": 2, "gates": [{"g": "T", "q": 0}]}"#,
    );
    let program = dir.path().join("p.json");
    let out = qca(&[
        "compile",
        circuit.to_str().unwrap(),
        "--out",
        program.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&program).unwrap()).unwrap();
    let first = v["columns"][0].as_str().unwrap();
    assert_eq!(&first[..1], "1");
}

#[test]
fn non_adjacent_cz_is_a_compile_error() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(
        &dir,
        "c.json",
        r#"{"rows": 4, "gates": [{"g": "CZ", "a": 0, "b": 2}]}"#,
    );
    let out = qca(&["compile", circuit.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("adjacent"));
}

#[test]
fn malformed_input_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(&dir, "bad.json", r#"{"s": 1"#);
    assert_eq!(qca(&["run", bad.to_str().unwrap()]).status.code(), Some(2));
    let bits = write(
        &dir,
        "bits.json",
        r#"{"s": 1, "r": 2, "columns": ["0x", "00"]}"#,
    );
    assert_eq!(qca(&["run", bits.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(
        qca(&["run", "--steps", "soon", "x.json"]).status.code(),
        Some(2)
    );
}

#[test]
fn identity_program_leaves_zero_state() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = write(&dir, "c.json", r#"{"rows": 2, "gates": []}"#);
    let program = dir.path().join("p.json");
    assert!(qca(&[
        "compile",
        circuit.to_str().unwrap(),
        "--out",
        program.to_str().unwrap()
    ])
    .status
    .success());
    let out = qca(&["run", program.to_str().unwrap(), "--backend", "factored"]);
    assert!(out.status.success());
    let amps = amplitudes(&json(&out));
    assert!((amps[0].0 - 1.0).abs() < 1e-12 && amps[0].1.abs() < 1e-12);
    assert!(amps[1..]
        .iter()
        .all(|&(re, im)| re.abs() < 1e-12 && im.abs() < 1e-12));
}

#[test]
fn backends_agree_and_record_metadata() {
    let program = data("torus_s1_r2.json");
    let dense = qca(&[
        "run",
        program.to_str().unwrap(),
        "--backend",
        "dense",
        "--seed",
        "3",
    ]);
    let factored = qca(&["run", program.to_str().unwrap(), "--backend", "factored"]);
    assert!(dense.status.success() && factored.status.success());
    let (d, f) = (json(&dense), json(&factored));
    assert_eq!(d["backend"], "dense");
    assert_eq!(d["topology"], "torus");
    assert_eq!(d["t"], 2);
    assert_eq!(d["seed"], 3);
    assert_eq!(d["sampler"], "chacha8-inverse-cdf");
    assert!(overlap(&amplitudes(&d), &amplitudes(&f)) >= 1.0 - 1e-10);
}

#[test]
fn amplitudes_carry_seventeen_significant_digits() {
    let out = qca(&["run", data("torus_s1_r2.json").to_str().unwrap()]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("5.0000000000000000e-1"), "{text}");
}

#[test]
fn samples_are_reproducible() {
    let program = data("torus_s1_r2.json");
    let args = [
        "run",
        program.to_str().unwrap(),
        "--samples",
        "1000",
        "--seed",
        "7",
    ];
    let a = qca(&args);
    let b = qca(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let samples = v["register"]["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 1000);
    assert!(v["register"].get("amplitudes").is_none());
    let other = qca(&[
        "run",
        program.to_str().unwrap(),
        "--samples",
        "1000",
        "--seed",
        "8",
    ]);
    assert_ne!(
        json(&other)["register"]["samples"],
        v["register"]["samples"]
    );
}

#[test]
fn factored_planar_is_rejected() {
    let out = qca(&[
        "run",
        data("torus_s1_r2.json").to_str().unwrap(),
        "--backend",
        "factored",
        "--topology",
        "planar",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oversized_dense_run_hits_the_guard() {
    let dir = tempfile::tempdir().unwrap();
    let column = "0".repeat(14);
    let program = write(
        &dir,
        "p.json",
        &format!(r#"{{"s": 7, "r": 2, "columns": ["{column}", "{column}"]}}"#),
    );
    let out = qca(&["run", program.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
    // the factored backend has no such limit
    let out = qca(&["run", program.to_str().unwrap(), "--backend", "factored"]);
    assert!(out.status.success());
}

#[test]
fn stock_torus_example_verifies() {
    let out = qca(&["verify", data("torus_s1_r2.json").to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records = json(&out);
    let records = records.as_array().unwrap();
    assert!(records.iter().all(|r| r["pass"] == true));
    for check in [
        "occupancy.program",
        "occupancy.data_purity",
        "cross_backend.infidelity",
        "schmidt.column_cuts",
    ] {
        assert!(records.iter().any(|r| r["check"] == check), "{check}");
    }
}

#[test]
fn corrupted_program_fails_occupancy() {
    let out = qca(&[
        "verify",
        data("torus_s1_r2.json").to_str().unwrap(),
        "--flip-bit",
        "1:0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("occupancy.program"));
}

#[test]
fn planar_example_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = qca(&[
        "verify",
        data("planar_s1_r2.json").to_str().unwrap(),
        "--topology",
        "planar",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let records: Value = serde_json::from_str(&std::fs::read_to_string(report).unwrap()).unwrap();
    let records = records.as_array().unwrap();
    for check in [
        "wavefront.left_of_front",
        "wavefront.monotone",
        "planar.d0_purity",
        "planar.d0_register_law",
    ] {
        assert!(records.iter().any(|r| r["check"] == check), "{check}");
    }
}

#[test]
fn bell_circuit_end_to_end() {
    let program = tempfile::NamedTempFile::new().unwrap();
    let out = qca(&[
        "compile",
        data("bell.json").to_str().unwrap(),
        "--out",
        program.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = qca(&[
        "run",
        program.path().to_str().unwrap(),
        "--backend",
        "factored",
    ]);
    let amps = amplitudes(&json(&out));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let bell = [(h, 0.0), (0.0, 0.0), (0.0, 0.0), (h, 0.0)];
    assert!(overlap(&amps, &bell) >= 1.0 - 1e-10);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn mps_rg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mps-rg"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn aklt_flow_trace_decays() {
    let dir = tempfile::tempdir().unwrap();
    let out = mps_rg(
        &["flow", "--preset", "aklt", "--steps", "8", "--out", "trace.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "step,d_eff,abs_lambda_1,abs_lambda_2,abs_lambda_3,abs_lambda_4,entropy_bits,residual,xi"
    );
    let last: Vec<f64> = text
        .lines()
        .last()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert!((last[2] - 1.0).abs() < 1e-12);
    assert!(last[3..6].iter().all(|&x| x < 1e-6), "{last:?}");

    let summary = json(&dir.path().join("trace.csv.summary.json"));
    assert_eq!(summary["status"], "converged");
    let manifest = json(&dir.path().join("trace.csv.manifest.json"));
    assert_eq!(manifest["command"], "flow");
    assert_eq!(manifest["params"]["steps"], 8);
    assert_eq!(manifest["tolerances"]["conv_tol"], 1e-12);
    assert_eq!(manifest["input_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn classify_ghz_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = mps_rg(&["classify", "--preset", "ghz"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["label"], "GHZ");
    assert_eq!(v["e_infinity_rank"], 2);
}

#[test]
fn malformed_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("malformed.json"), "{\"d\": 2, \"D\": ").unwrap();
    let out = mps_rg(&["classify", "--in", "malformed.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("parse error"));

    fs::write(
        dir.path().join("shape.json"),
        r#"{"d": 2, "D": 2, "tensors": [[[[1, 0]]]]}"#,
    )
    .unwrap();
    let out = mps_rg(&["flow", "--in", "shape.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flags_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["flow"][..],
        &["flow", "--preset", "aklt", "--random"],
        &["flow", "--preset", "nope"],
        &["flow", "--preset", "w"],
        &["flow", "--preset", "aklt", "--steps", "0"],
        &["observe", "--preset", "aklt", "--op", "z"],
        &["spectrum", "--model", "xxz", "--value", "0.5"],
        &["ed-crosscheck", "--lambda", "0.5", "--sites", "18"],
    ] {
        let out = mps_rg(args, dir.path());
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn periodic_flow_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = mps_rg(
        &["classify", "--preset", "w", "--params", "0.4", "--out", "w.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    let v = json(&dir.path().join("w.json"));
    assert_eq!(v["flow"]["periodic"], true);
    let out = mps_rg(&["flow", "--preset", "w", "--params", "0.4"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let runs = [
        vec![
            "flow", "--random", "--seed", "7", "--d", "3", "--D", "3", "--steps", "6",
        ],
        vec!["classify", "--random", "--seed", "3"],
        vec![
            "classify",
            "--preset",
            "domain_wall",
            "--params",
            "0.2,0.3,0.1",
            "--sweep",
            "0.1:1.2:4",
        ],
        vec!["observe", "--preset", "cluster", "--sites", "6", "--op", "x"],
        vec!["spectrum", "--model", "ising", "--value", "0.5", "--top", "8"],
        vec!["state", "--preset", "aklt", "--sites", "4", "--emit", "amplitudes"],
    ];
    for args in runs {
        let a = mps_rg(&args, dir.path());
        let b = mps_rg(&args, dir.path());
        assert_eq!(
            a.status.code(),
            Some(0),
            "{args:?}: {}",
            String::from_utf8_lossy(&a.stderr)
        );
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn state_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = mps_rg(
        &["state", "--preset", "aklt", "--emit", "mps", "--out", "aklt.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let from_file = mps_rg(&["classify", "--in", "aklt.json"], dir.path());
    let from_preset = mps_rg(&["classify", "--preset", "aklt"], dir.path());
    assert_eq!(from_file.stdout, from_preset.stdout);
    let v: Value = serde_json::from_slice(&from_file.stdout).unwrap();
    assert_eq!(v["label"], "GenericDimer");
    for (x, want) in v["lambdas"].as_array().unwrap().iter().zip([0.5, 0.5]) {
        assert!((x.as_f64().unwrap() - want).abs() < 1e-8);
    }
}

#[test]
fn observe_cluster_correlators() {
    let dir = tempfile::tempdir().unwrap();
    let out = mps_rg(
        &["observe", "--preset", "cluster", "--sites", "8", "--op", "z"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    for c in v["connected_correlator"].as_array().unwrap() {
        let j = c["j"].as_u64().unwrap();
        if (2..=6).contains(&j) {
            let [re, im] = [c["value"][0].as_f64().unwrap(), c["value"][1].as_f64().unwrap()];
            assert!(re.hypot(im) < 1e-10, "{c}");
        }
    }
    assert_eq!(v["block_entropy_bits"].as_array().unwrap().len(), 7);
}

#[test]
fn spectrum_summary_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = mps_rg(
        &["spectrum", "--model", "ising", "--value", "2", "--out", "s.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert!(text.starts_with("index,weight,coefficient,neg_log_weight\n"));
    let s = json(&dir.path().join("s.csv.summary.json"));
    assert_eq!(s["branch"], "ordered");
    assert_eq!(s["leading_degeneracy"], 2);

    let help = mps_rg(&["flow", "--help"], dir.path());
    let help = String::from_utf8_lossy(&help.stdout);
    for col in ["step", "d_eff", "abs_lambda_1-4", "entropy_bits", "residual", "xi"] {
        assert!(help.contains(col), "{col}");
    }
}

#[test]
fn ed_crosscheck_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = mps_rg(&["ed-crosscheck", "--lambda", "0.25", "--sites", "10"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["gap_index"], 1);
    assert!(v["relative_error"].as_f64().unwrap() < 0.1);
}

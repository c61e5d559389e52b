//! End-to-end exercises of the torlin binary: exit codes, artifact shapes,
//! verify round trips, and byte-level determinism.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

const BIN: &str = env!("CARGO_BIN_EXE_torlin");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("TORLIN_SEED")
        .output()
        .expect("binary should launch")
}

fn run_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "expected success, got {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout should be JSON")
}

fn write_artifact(dir: &Path, name: &str, args: &[&str]) -> std::path::PathBuf {
    let out = run(args);
    assert!(out.status.success(), "emitting {name} failed");
    let path = dir.join(name);
    std::fs::write(&path, &out.stdout).unwrap();
    path
}

#[test]
fn rep_matches_symmetric_square() {
    let doc = run_json(&["rep", "--matrix", "2,1,1,1", "--dim", "3"]);
    let expect = serde_json::json!([["4", "2", "1"], ["4", "3", "2"], ["1", "1", "1"]]);
    assert_eq!(doc["entries"], expect);
    assert_eq!(doc["det"], "1");
    assert_eq!(doc["trace"], "8");
}

#[test]
fn rep_accepts_words_and_verifies() {
    let dir = tempdir().unwrap();
    // ts = [[1,1],[0,1]]·... either way the emitted artifact must re-verify.
    let path = write_artifact(dir.path(), "rep.json", &["rep", "--word", "tst", "--dim", "4"]);
    let out = run(&["rep", "--verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn identical_invocations_are_byte_identical() {
    let a = run(&["rep", "--matrix", "2,1,1,1", "--dim", "5"]);
    let b = run(&["rep", "--matrix", "2,1,1,1", "--dim", "5"]);
    assert_eq!(a.stdout, b.stdout);

    let args = ["simulate", "--matrix", "2,1,1,1", "--dim", "3", "--steps", "400", "--freq", "1,0,1", "--seed", "42"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn betti_reports_the_amalgam_constants() {
    let doc = run_json(&["betti", "--group", "sl2z"]);
    assert_eq!(doc["beta"], serde_json::json!(["0", "1/12", "0"]));
    assert_eq!(doc["fundamental_group_trivial"], Value::Bool(true));
    assert_eq!(doc["witness_index"], serde_json::json!(1));

    let doc = run_json(&["betti", "--group", "psl2z", "--amplify", "2/3"]);
    assert_eq!(doc["beta"][1], "1/6");
    assert_eq!(doc["amplified"]["beta"][1], "1/4");
    assert_eq!(doc["amplified"]["fundamental_group_trivial"], Value::Bool(true));
}

#[test]
fn cert_rejects_a_parabolic_element() {
    let out = run(&["cert", "--matrix", "1,1,0,1", "--dim", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
}

#[test]
fn cert_verify_catches_a_tampered_witness() {
    let dir = tempdir().unwrap();
    let path = write_artifact(
        dir.path(),
        "cert.json",
        &["cert", "--matrix", "2,1,1,1", "--dim", "3"],
    );
    let out = run(&["cert", "--verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    doc["certificate"]["evidence"]["vector"][0] = Value::String("3".into());
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();
    let out = run(&["cert", "--verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_flags_are_usage_errors() {
    let out = run(&["rep", "--bogus", "1"]);
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["no-such-subcommand"]);
    assert_eq!(out.status.code(), Some(64));
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn orbit_of_a_fixed_vector_is_a_singleton() {
    let doc = run_json(&[
        "orbit", "--vector", "1,-1,-1", "--gens", "2,1,1,1", "--dim", "3", "--cap", "100",
    ]);
    assert_eq!(doc["result"]["status"], "finite");
    assert_eq!(doc["result"]["orbit"].as_array().unwrap().len(), 1);
}

#[test]
fn factor_round_trips_and_verifies() {
    let dir = tempdir().unwrap();
    let path = write_artifact(
        dir.path(),
        "factor.json",
        &["factor", "--coeffs", "1,0;0,0;-1,0"],
    );
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["points"].as_array().unwrap().len(), 2);
    assert!(doc["round_trip_distance"].as_f64().unwrap() <= 1e-8);
    let out = run(&["factor", "--verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn amen_pipeline_never_increases_the_defect() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("amen.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "field": {
                "sample": ["p", "q"],
                "action": {"a": {"0": 1, "1": 0}},
                "measures": [{"e": "1"}, {"a": "1/2", "e": "1/2"}]
            },
            "elements": ["a"],
            "pipeline": [
                {"op": "finite_average", "group": [[0, 1], [1, 0]]},
                {"op": "product_extend",
                 "factor": {"sample": ["u"], "action": {"a": {"0": 0}}}},
                {"op": "sym_product", "arity": 2}
            ]
        })
        .to_string(),
    )
    .unwrap();
    let csv = dir.path().join("amen.csv");
    let artifact = dir.path().join("amen_out.json");
    let out = run(&[
        "amen", "--config", config.to_str().unwrap(), "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    std::fs::write(&artifact, &out.stdout).unwrap();

    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let stages = doc["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 4);
    let sups: Vec<(i64, i64)> = stages
        .iter()
        .map(|s| {
            let text = s["sup"].as_str().unwrap();
            match text.split_once('/') {
                Some((p, q)) => (p.parse().unwrap(), q.parse().unwrap()),
                None => (text.parse().unwrap(), 1),
            }
        })
        .collect();
    // averaging must strictly help here, and no later stage may regress
    assert!(sups[1].0 * sups[0].1 < sups[0].0 * sups[1].1);
    for pair in sups.windows(2) {
        assert!(pair[1].0 * pair[0].1 <= pair[0].0 * pair[1].1);
    }

    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("stage,op,element,point,value"));
    let out = run(&["amen", "--verify", artifact.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn relalg_accepts_cyclic_shifts_and_rejects_a_bad_cocycle() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("relalg.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "points": 3,
            "classes": [[0, 1, 2]],
            "permutations": [[1, 2, 0], [2, 0, 1]],
            "multiplier": [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]
        })
        .to_string(),
    )
    .unwrap();
    let doc = run_json(&["relalg", "--config", config.to_str().unwrap()]);
    assert_eq!(doc["verified"], Value::Bool(true));
    assert!(doc["max_deviation"].as_f64().unwrap() <= 1e-10);

    // flip one diagonal cocycle value: the axiom check must refuse it
    let mut entries = Vec::new();
    for x in 0..3u8 {
        for y in 0..3u8 {
            for z in 0..3u8 {
                let v = if (x, y, z) == (0, 0, 0) { -1.0 } else { 1.0 };
                entries.push(serde_json::json!({"x": x, "y": y, "z": z, "value": [v, 0.0]}));
            }
        }
    }
    std::fs::write(
        &config,
        serde_json::json!({
            "points": 3,
            "classes": [[0, 1, 2]],
            "cocycle": entries,
            "permutations": [[1, 2, 0]]
        })
        .to_string(),
    )
    .unwrap();
    let out = run(&["relalg", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_env_seed_matches_the_flag() {
    let dir = tempdir().unwrap();
    let args = ["simulate", "--matrix", "2,1,1,1", "--dim", "3", "--steps", "300", "--freq", "2,-1,0"];
    let with_flag = {
        let mut v: Vec<&str> = args.to_vec();
        v.extend(["--seed", "42"]);
        run(&v)
    };
    let with_env = Command::new(BIN)
        .args(args)
        .env("TORLIN_SEED", "42")
        .output()
        .unwrap();
    assert!(with_flag.status.success());
    assert_eq!(with_flag.stdout, with_env.stdout);

    // rational starts are exact: this orbit is periodic and its artifact verifies
    let csv = dir.path().join("sim.csv");
    let path = write_artifact(
        dir.path(),
        "sim.json",
        &[
            "simulate", "--matrix", "2,1,1,1", "--dim", "3", "--start", "1/7,2/7,3/7",
            "--steps", "200", "--freq", "1,0,-1", "--box", "0:0.5,0:0.5,0:1",
            "--out", csv.to_str().unwrap(),
        ],
    );
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(doc["period"]["preperiod"], 0);
    assert_eq!(doc["period"]["period"], 4);
    assert!(doc["discrepancy"].as_f64().unwrap() < 0.05);
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("k,re,im,abs\n"));
    assert_eq!(csv_text.lines().count(), 202); // header + steps+1 rows at stride 1

    let out = run(&["simulate", "--verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn dicho_check_separates_product_from_diagonal() {
    let dir = tempdir().unwrap();
    let config = dir.path().join("dicho.json");
    std::fs::write(
        &config,
        serde_json::json!({
            "dim": 2,
            "grid": 8,
            "observables": [{"f1": [1, 0], "f2": [-1, 0]}],
            "maps": [{"type": "linear", "matrix": "2,1,1,1"}],
            "measures": [
                {"kind": "product"},
                {"kind": "diagonal", "delta": 0.25}
            ]
        })
        .to_string(),
    )
    .unwrap();
    let csv = dir.path().join("dicho.csv");
    let out = run(&[
        "dicho-check", "--config", config.to_str().unwrap(), "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let doc: Value = serde_json::from_slice(&out.stdout).unwrap();
    let diags = doc["diagnostics"].as_array().unwrap();
    assert_eq!(diags.len(), 2);

    // product measure: independent marginals, defect pinned at 1
    let product = &diags[0];
    assert!((product["max_correlation_defect"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(product["pushforward_defect"].as_f64().unwrap() < 1e-9);

    // diagonal offset delta: defect 2 sin(pi delta), here sqrt(2)
    let diagonal = &diags[1];
    assert_eq!(diagonal["diagonal_mass"].as_f64().unwrap(), 0.0);
    let defect = diagonal["max_correlation_defect"].as_f64().unwrap();
    assert!((defect - std::f64::consts::SQRT_2).abs() < 1e-12);

    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 3);

    let artifact = dir.path().join("dicho_out.json");
    std::fs::write(&artifact, &out.stdout).unwrap();
    let out = run(&["dicho-check", "--verify", artifact.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
}

use std::path::{Path, PathBuf};

use assert_cmd::Command;
use serde_json::Value;
use tempfile::TempDir;

const ROTATION: &str = "(1 4 3 2)(5 8 7 6)";

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn load(name: &str) -> Value {
    let text = std::fs::read_to_string(schema_dir().join(name)).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn assert_schema(name: &str, doc: &Value) {
    let mut opts = jsonschema::options();
    for shared in ["matrix.schema.json", "rank_vector.schema.json"] {
        let resource = jsonschema::Resource::from_contents(load(shared)).unwrap();
        opts = opts.with_resource(format!("json-schema:///{shared}"), resource);
    }
    let validator = opts.build(&load(name)).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

fn permnet() -> Command {
    Command::cargo_bin("permnet").unwrap()
}

fn run_json(args: &[&str]) -> Value {
    let out = permnet().args(args).assert().success().get_output().stdout.clone();
    serde_json::from_slice(&out).unwrap()
}

fn write_csv(dir: &TempDir, name: &str, rows: usize, cols: usize, seed: u64) -> String {
    // Deterministic pseudo-random entries without pulling in a generator.
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut text = String::new();
    for _ in 0..rows {
        let row: Vec<String> = (0..cols)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                format!("{}", ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0)
            })
            .collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn count_matches_known_values() {
    permnet()
        .args(["count", "--perm", ROTATION, "--n", "9", "--rank", "3", "--field", "real"])
        .assert()
        .success()
        .stdout("5\n");
    permnet()
        .args(["count", "--cycle-type", "28x28", "--rank", "99", "--field", "real"])
        .assert()
        .success()
        .stdout("72425986088826\n");
    permnet()
        .args(["count", "--cycle-type", "28x28", "--rank", "99", "--field", "complex"])
        .assert()
        .success()
        .stdout("2313670597255751898787300468\n");
}

#[test]
fn analyze_reports_commutant_dimensions() {
    let cases = [
        (vec!["--perm", "(1 4 3 2)(5 8 7 6)", "--n", "9"], 21),
        (vec!["--perm", ROTATION, "--perm", "(1 2)(3 4)(6 8)", "--n", "9"], 15),
        (vec!["--perm", ROTATION, "--perm", "(1 2)(3 4)(6 8)", "--perm", "(1 5 2)(3 4 7)(6 8 9)", "--n", "9"], 3),
        (vec!["--perm", "", "--n", "4"], 16),
        (vec!["--perm", "2 3 1"], 3),
    ];
    for (perm, dim) in cases {
        let mut args = vec!["analyze"];
        args.extend(perm);
        let doc = run_json(&args);
        assert_schema("analyze.schema.json", &doc);
        assert_eq!(doc["commutant_dimension"], dim, "{args:?}");
    }
}

#[test]
fn analyze_accepts_several_generators() {
    let doc = run_json(&["analyze", "--perm", "(1 2)", "--perm", "(2 3)", "--n", "4"]);
    assert_schema("analyze.schema.json", &doc);
    // S_3 on {1,2,3} plus a fixed point: orbits on pairs.
    assert_eq!(doc["commutant_dimension"], 5);
    assert_eq!(doc["invariant_blocks"], 2);
    assert!(doc.get("real_blocks").is_none());
}

#[test]
fn components_listing_matches_count() {
    let doc = run_json(&["components", "--perm", ROTATION, "--n", "9", "--rank", "3"]);
    assert_schema("components.schema.json", &doc);
    assert_eq!(doc["count"], "5");
    assert_eq!(doc["components"].as_array().unwrap().len(), 5);
    let doc = run_json(&["components", "--cycle-type", "28x28", "--rank", "99", "--count-only"]);
    assert_eq!(doc["count"], "72425986088826");
    permnet()
        .args(["components", "--cycle-type", "28x28", "--rank", "99"])
        .assert()
        .code(1)
        .stderr(predicates::str::contains("limit_exceeded"));
}

#[test]
fn fit_modes_validate_and_order() {
    let dir = TempDir::new().unwrap();
    let x = write_csv(&dir, "x.csv", 8, 24, 1);
    let y = write_csv(&dir, "y.csv", 8, 24, 2);
    let out = dir.path().join("m.json");
    let base = ["fit", "--perm", ROTATION, "--x", &x, "--y", &y, "--rank", "3"];
    let loss = |mode: &str, extra: &[&str]| {
        let mut args = base.to_vec();
        args.extend(["--mode", mode]);
        args.extend(extra);
        let doc = run_json(&args);
        assert_schema("fit.schema.json", &doc);
        doc
    };
    let free = loss("unconstrained", &[]);
    let eq = loss("equivariant", &["--out", out.to_str().unwrap()]);
    let inv = loss("invariant", &[]);
    let heur = loss("equivariant", &["--heuristic", "energy"]);
    let given = loss("equivariant", &["--component", "0,1,1"]);
    let l = |d: &Value| d["loss"].as_f64().unwrap();
    // Both constrained sets sit inside the rank ≤ 3 matrices.
    assert!(l(&free) <= l(&eq) + 1e-9);
    assert!(l(&free) <= l(&inv) + 1e-9);
    assert!(l(&eq) <= l(&heur) + 1e-9);
    assert_eq!(eq["selection"], "exhaustive");
    assert_eq!(given["selection"], "given");
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_schema("matrix.schema.json", &written);
    assert_eq!(written, eq["minimizer"]);
}

#[test]
fn fit_rejects_bad_components() {
    let dir = TempDir::new().unwrap();
    let x = write_csv(&dir, "x.csv", 8, 24, 3);
    let y = write_csv(&dir, "y.csv", 8, 24, 4);
    let assert = permnet()
        .args(["fit", "--mode", "equivariant", "--perm", ROTATION, "--x", &x, "--y", &y])
        .args(["--rank", "3", "--component", "1,1,1"])
        .assert()
        .code(1);
    let err: Value = serde_json::from_slice(&assert.get_output().stderr).unwrap();
    assert_schema("error.schema.json", &err);
    assert_eq!(err["error"], "inadmissible");
}

#[test]
fn rank_deficient_data_needs_ridge() {
    let dir = TempDir::new().unwrap();
    let x = write_csv(&dir, "x.csv", 8, 4, 5);
    let y = write_csv(&dir, "y.csv", 8, 4, 6);
    let assert = permnet()
        .args(["fit", "--mode", "unconstrained", "--x", &x, "--y", &y, "--rank", "2"])
        .assert()
        .code(1);
    let err: Value = serde_json::from_slice(&assert.get_output().stderr).unwrap();
    assert_eq!(err["error"], "rank_deficient");
    let doc = run_json(&["fit", "--mode", "unconstrained", "--x", &x, "--y", &y, "--rank", "2", "--ridge", "0.1"]);
    assert_eq!(doc["regularization"], 0.1);
}

#[test]
fn project_then_factorize_round_trips() {
    let dir = TempDir::new().unwrap();
    let m = write_csv(&dir, "m.csv", 8, 8, 7);
    for mode in ["equivariant", "invariant"] {
        let projected = dir.path().join(format!("{mode}.csv"));
        permnet()
            .args(["project", "--mode", mode, "--perm", ROTATION, "-m", &m, "--out"])
            .arg(&projected)
            .assert()
            .success();
        let doc = run_json(&["factorize", "--mode", mode, "--perm", ROTATION, "-m", projected.to_str().unwrap()]);
        assert!(doc["residual"].as_f64().unwrap() < 1e-9, "{mode}: {}", doc["residual"]);
        assert_schema("matrix.schema.json", &doc["decoder"]);
        assert_schema("matrix.schema.json", &doc["encoder"]);
    }
    // The raw random matrix is not equivariant.
    permnet()
        .args(["factorize", "--mode", "equivariant", "--perm", ROTATION, "-m", &m])
        .assert()
        .code(1)
        .stderr(predicates::str::contains("not_equivariant"));
}

#[test]
fn verify_passes_and_is_deterministic() {
    let args = ["verify", "--perm", "(1 5 2)(3 4 7)(6 8 9)", "--seed", "3", "--samples", "50"];
    let a = run_json(&args);
    let b = run_json(&args);
    assert_schema("verify.schema.json", &a);
    assert_eq!(a, b);
    assert_eq!(a["all_passed"], true);
    let big = run_json(&["verify", "--cycle-type", "28x28", "--rank", "4"]);
    let skipped = big["checks"].as_array().unwrap().iter().filter(|c| c["status"] == "skipped").count();
    assert!(skipped >= 2);
}

#[test]
fn demo_shift_reports_four_architectures() {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("x.csv");
    let assert = permnet()
        .args(["demo-shift", "--height", "4", "--width", "8", "--samples", "200", "--rank", "8", "--equal", "1"])
        .args(["--skip", "2", "--data-out"])
        .arg(&data)
        .assert()
        .success();
    let doc: Value = serde_json::from_slice(&assert.get_output().stdout).unwrap();
    assert_schema("demo_shift.schema.json", &doc);
    assert_eq!(doc["architectures"].as_array().unwrap().len(), 4);
    let text = std::fs::read_to_string(&data).unwrap();
    assert_eq!(text.lines().count(), 32);
}

#[test]
fn usage_errors_exit_two() {
    permnet().args(["count", "--rank", "3"]).assert().code(2);
    permnet().args(["count", "--cycle-type", "28", "--rank", "3"]).assert().code(2);
    permnet().args(["fit", "--mode", "sideways"]).assert().code(2);
    permnet()
        .args(["analyze", "--perm", "(1 2)", "--n", "2", "--cycle-type", "2x2"])
        .assert()
        .code(2);
}

#[test]
fn malformed_input_is_structured() {
    let assert = permnet().args(["count", "--perm", "(1 2", "--rank", "1"]).assert().code(1);
    let err: Value = serde_json::from_slice(&assert.get_output().stderr).unwrap();
    assert_schema("error.schema.json", &err);
    assert_eq!(err["error"], "parse");
}

#[test]
fn thread_count_does_not_change_results() {
    let args = ["verify", "--perm", ROTATION, "--n", "9", "--samples", "30"];
    let one = permnet().env("PERMNET_THREADS", "1").args(args).assert().success().get_output().stdout.clone();
    let four = permnet().env("PERMNET_THREADS", "4").args(args).assert().success().get_output().stdout.clone();
    assert_eq!(one, four);
    permnet().env("PERMNET_THREADS", "many").args(args).assert().code(2);
}

#[test]
fn perm_file_and_frequency_order() {
    let dir = TempDir::new().unwrap();
    let gens = dir.path().join("gens.txt");
    std::fs::write(&gens, "(1 4 3 2)(5 8 7 6)\n\n(1 2)(3 4)(6 8)\n").unwrap();
    let doc = run_json(&["analyze", "--perm-file", gens.to_str().unwrap(), "--n", "9"]);
    assert_eq!(doc["commutant_dimension"], 15);

    let x = write_csv(&dir, "x.csv", 8, 20, 8);
    let y = write_csv(&dir, "y.csv", 8, 20, 9);
    // Frequency order lists (1,1), then the quarter-turn pair, then (2,1).
    let doc = run_json(&[
        "fit", "--mode", "equivariant", "--perm", ROTATION, "--x", &x, "--y", &y, "--rank", "3",
        "--component", "1,0,1", "--frequency-order",
    ]);
    let ranks: Vec<u64> = doc["component"]["rank_vector"]["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["rank"].as_u64().unwrap())
        .collect();
    assert_eq!(ranks, [1, 1, 0]);
}

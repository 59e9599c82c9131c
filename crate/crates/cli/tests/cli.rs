use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn edmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edmc"))
        .args(args)
        .env_remove("EDM_THREADS")
        .output()
        .expect("spawn edmc")
}

fn ok_json(args: &[&str]) -> Value {
    let out = edmc(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn schema(name: &str) -> Value {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

/// Validates the subset of JSON Schema used by the files in `schemas/`.
fn validate(s: &Value, v: &Value, at: &str) -> Vec<String> {
    let mut errs = Vec::new();
    if let Some(t) = s.get("type") {
        let types: Vec<&str> = match t {
            Value::String(x) => vec![x.as_str()],
            Value::Array(xs) => xs.iter().filter_map(Value::as_str).collect(),
            _ => vec![],
        };
        let matches = |t: &str| match t {
            "object" => v.is_object(),
            "array" => v.is_array(),
            "string" => v.is_string(),
            "boolean" => v.is_boolean(),
            "null" => v.is_null(),
            "number" => v.is_number(),
            "integer" => v.is_u64() || v.is_i64(),
            _ => false,
        };
        if !types.iter().any(|t| matches(t)) {
            errs.push(format!("{at}: expected {types:?}, got {v}"));
            return errs;
        }
    }
    if let Some(allowed) = s.get("enum").and_then(Value::as_array) {
        if !allowed.contains(v) {
            errs.push(format!("{at}: {v} not in enum"));
        }
    }
    if let Some(x) = v.as_f64() {
        if let Some(min) = s.get("minimum").and_then(Value::as_f64) {
            if x < min {
                errs.push(format!("{at}: {x} < {min}"));
            }
        }
        if let Some(max) = s.get("maximum").and_then(Value::as_f64) {
            if x > max {
                errs.push(format!("{at}: {x} > {max}"));
            }
        }
    }
    if let Some(obj) = v.as_object() {
        for key in s
            .get("required")
            .and_then(Value::as_array)
            .into_iter()
            .flatten()
        {
            let key = key.as_str().unwrap();
            if !obj.contains_key(key) {
                errs.push(format!("{at}: missing {key}"));
            }
        }
        if let Some(props) = s.get("properties").and_then(Value::as_object) {
            for (key, sub) in props {
                if let Some(child) = obj.get(key) {
                    errs.extend(validate(sub, child, &format!("{at}.{key}")));
                }
            }
        }
    }
    if let Some(items) = v.as_array() {
        if let Some(n) = s.get("minItems").and_then(Value::as_u64) {
            if (items.len() as u64) < n {
                errs.push(format!("{at}: fewer than {n} items"));
            }
        }
        if let Some(n) = s.get("maxItems").and_then(Value::as_u64) {
            if (items.len() as u64) > n {
                errs.push(format!("{at}: more than {n} items"));
            }
        }
        if let Some(sub) = s.get("items") {
            for (i, item) in items.iter().enumerate() {
                errs.extend(validate(sub, item, &format!("{at}[{i}]")));
            }
        }
    }
    errs
}

fn assert_schema(name: &str, v: &Value) {
    let errs = validate(&schema(name), v, "$");
    assert!(errs.is_empty(), "{name} schema violations: {errs:#?}");
}

fn close(got: &Value, want: f64, rel: f64) {
    let g = got
        .as_f64()
        .unwrap_or_else(|| panic!("not a number: {got}"));
    assert!((g - want).abs() <= rel * want.abs(), "{g} vs {want}");
}

#[test]
fn validator_rejects_bad_documents() {
    let s = schema("gen");
    assert!(!validate(&s, &serde_json::json!({"N": 1}), "$").is_empty());
    assert!(!validate(&s, &serde_json::json!([]), "$").is_empty());
}

#[test]
fn gen_rejects_single_node() {
    let dir = tempfile::tempdir().unwrap();
    let out = edmc(&[
        "gen",
        "--n",
        "1",
        "--d",
        "2",
        "--seed",
        "1",
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("N must be ≥ 2"), "{}", stderr(&out));
}

#[test]
fn bounds_rejects_t_one() {
    let out = edmc(&["bounds", "--d", "2", "--t", "1", "--gamma", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("t must be < 1 for N_min"));
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(
        edmc(&["bounds", "--d", "2", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(edmc(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(edmc(&["--help"]).status.code(), Some(0));
    assert_eq!(edmc(&["gen", "--help"]).status.code(), Some(0));
    let out = edmc(&[
        "bounds", "--d", "2", "--t", "0.5", "--gamma", "0.1", "--m2", "0.3",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bounds_uniform_d2() {
    let v = ok_json(&[
        "bounds", "--dist", "uniform", "--d", "2", "--t", "0.5", "--gamma", "0.1",
    ]);
    assert_schema("bounds", &v);
    close(&v["theta"], 59.2208081984, 1e-10);
    close(&v["lambda_star"], 0.118201696548, 1e-10);
    assert_eq!(v["N_min"], 1748);
    assert_eq!(v["eps_vacuous"], false);
    assert!(v["eps_t"].as_f64().unwrap() <= 0.1);
    assert_eq!(v["input"]["log"], "natural");
}

#[test]
fn bounds_explicit_moments_match_dist() {
    let from_dist = ok_json(&["bounds", "--d", "3", "--t", "0.5", "--gamma", "0.1"]);
    let explicit = ok_json(&[
        "bounds",
        "--d",
        "3",
        "--t",
        "0.5",
        "--gamma",
        "0.1",
        "--m2",
        "0.333333333333333333",
        "--m3",
        "0",
        "--m4",
        "0.2",
        "--c",
        "1",
    ]);
    close(
        &explicit["theta"],
        from_dist["theta"].as_f64().unwrap(),
        1e-12,
    );
    close(&from_dist["theta"], 104.43142, 1e-6);
}

#[test]
fn gen_files_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        ["gen", "--n", "12", "--d", "2", "--seed", "42", "--out"]
            .iter()
            .map(|s| s.to_string())
            .chain([path_str(d).to_string()])
            .collect::<Vec<_>>()
    };
    let run = |d: &Path| {
        let a = args(d);
        let a: Vec<&str> = a.iter().map(String::as_str).collect();
        ok_json(&a)
    };
    let va = run(a.path());
    run(b.path());
    assert_schema("gen", &va);
    for f in ["cloud.csv", "edm.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert_eq!(x, y, "{f} differs between runs");
    }
    let cloud = std::fs::read_to_string(a.path().join("cloud.csv")).unwrap();
    let mut lines = cloud.lines();
    assert!(lines.next().unwrap().starts_with("# n=12,d=2,seed=42,"));
    assert_eq!(lines.next().unwrap(), "x1,x2");
    assert_eq!(lines.count(), 12);

    let edm = std::fs::read_to_string(a.path().join("edm.csv")).unwrap();
    let rows: Vec<Vec<f64>> = edm
        .lines()
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 12);
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row[i], 0.0);
        for (j, v) in row.iter().enumerate() {
            assert_eq!(*v, rows[j][i]);
        }
    }
}

#[test]
fn coherence_paths_agree() {
    let dir = tempfile::tempdir().unwrap();
    ok_json(&[
        "gen",
        "--n",
        "30",
        "--d",
        "2",
        "--seed",
        "7",
        "--out",
        path_str(dir.path()),
    ]);
    let cloud = dir.path().join("cloud.csv");
    let v = ok_json(&["coherence", "--cloud", path_str(&cloud), "--path", "both"]);
    assert_schema("coherence", &v);
    assert!(v["abs_diff"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["qr"]["effective_rank"], 4);

    let sampled = ok_json(&[
        "coherence",
        "--n",
        "30",
        "--d",
        "2",
        "--seed",
        "7",
        "--path",
        "qr",
    ]);
    assert_eq!(sampled["qr"], v["qr"]);
}

#[test]
fn verify_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trials.csv");
    let args = [
        "verify",
        "--claim",
        "coherence",
        "--d",
        "2",
        "--t",
        "0.5",
        "--gamma",
        "0.1",
        "--n",
        "300",
        "--trials",
        "12",
        "--seed",
        "9",
        "--csv",
        path_str(&csv),
    ];
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_edmc"))
            .args(args)
            .env("EDM_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    let first_csv = std::fs::read(&csv).unwrap();
    let two = run("2");
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, two.stdout);
    assert_eq!(first_csv, std::fs::read(&csv).unwrap());

    let v: Value = serde_json::from_slice(&one.stdout).unwrap();
    assert_schema("verify", &v);
    assert_eq!(v["trials"], 12);
    assert!(v.get("rows").is_none());
    let text = String::from_utf8(first_csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "trial,seed,mu_U,mu1_emp,sigma_min_sq_A,rank,failure"
    );
    assert_eq!(lines.count(), 12);
}

#[test]
fn verify_defaults_to_n_min() {
    let v = ok_json(&[
        "verify", "--claim", "chernoff", "--d", "2", "--t", "0.5", "--gamma", "0.1", "--trials",
        "4",
    ]);
    assert_eq!(v["config"]["N"], 1748);
    assert_eq!(v["below_n_min"], false);
    assert_eq!(v["claim_holds"], true);
}

#[test]
fn complete_round_trips_observations() {
    let dir = tempfile::tempdir().unwrap();
    ok_json(&[
        "gen",
        "--n",
        "30",
        "--d",
        "2",
        "--seed",
        "3",
        "--out",
        path_str(dir.path()),
    ]);
    let edm = dir.path().join("edm.csv");
    let mask = dir.path().join("obs.csv");
    let est = dir.path().join("est.csv");
    let v = ok_json(&[
        "complete",
        "--in",
        path_str(&edm),
        "--m",
        "700",
        "--seed",
        "11",
        "--mask-out",
        path_str(&mask),
        "--out",
        path_str(&est),
    ]);
    assert_schema("complete", &v);
    assert_eq!(v["converged"], true);
    assert!(v["rel_error"].as_f64().unwrap() < 1e-2);
    assert_eq!(
        v["residual_history"].as_array().unwrap().len() as u64,
        v["iterations"].as_u64().unwrap()
    );
    assert_eq!(std::fs::read_to_string(&est).unwrap().lines().count(), 30);

    let w = ok_json(&["complete", "--observations", path_str(&mask), "--n", "30"]);
    assert_eq!(w["iterations"], v["iterations"]);
    assert_eq!(w["final_residual"], v["final_residual"]);
    assert!(w["rel_error"].is_null());
}

#[test]
fn complete_needs_one_input() {
    let out = edmc(&["complete", "--m", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn sweep_small_grid() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sweep.csv");
    let v = ok_json(&[
        "sweep",
        "--n",
        "20",
        "--d",
        "1",
        "--m-grid",
        "40,340",
        "--seeds",
        "2",
        "--seed",
        "5",
        "--csv",
        path_str(&csv),
    ]);
    assert_schema("sweep", &v);
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 2);
    assert_eq!(pts[1]["success_rate"], 1.0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 4);
}

#[test]
fn section4_checks() {
    let v = ok_json(&["section4"]);
    assert_schema("section4", &v);
    close(&v["lambda_min_d2"], 0.118201696548, 1e-10);
    assert_eq!(v["not_psd"], true);
    assert!(v["not_psd_eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .any(|e| e.as_f64().unwrap() < 0.0));
    assert_eq!(v["checks_pass"], true);
}

#[test]
fn config_file_supplies_flags_and_cli_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bounds.json");
    std::fs::write(
        &cfg,
        r#"{"d": 2, "t": 0.5, "gamma": 0.1,
            "dist": {"kind": "uniform", "params": {}, "support": [-1, 1]}}"#,
    )
    .unwrap();
    let v = ok_json(&["bounds", "--config", path_str(&cfg)]);
    assert_eq!(v["N_min"], 1748);
    let w = ok_json(&["bounds", "--config", path_str(&cfg), "--t", "0.6"]);
    close(&w["mu0"], v["theta"].as_f64().unwrap() / (0.6 * 4.0), 1e-10);

    std::fs::write(
        &cfg,
        r#"{"d": 2, "dist": {"kind": "uniform", "colour": 1}}"#,
    )
    .unwrap();
    assert_eq!(
        edmc(&["bounds", "--config", path_str(&cfg)]).status.code(),
        Some(2)
    );
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gelfand"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn diagnostic(o: &Output) -> Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    let line = text.lines().last().expect("diagnostic line");
    serde_json::from_str(line).expect("diagnostic is JSON")
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

#[test]
fn pair_check_reports_verdicts() {
    let o = run(&["pair-check", "--builtin", "z2-r2"]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("n: 2"));
    assert!(out.contains("degrees: [2, 2, 2]"));
    assert!(
        out.contains("assumption fails, witness J=(1,0,1), J'=(0,2,0)"),
        "{out}"
    );

    let o = run(&["pair-check", "--builtin", "so2", "--max-degree", "12"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("holds up to M=12"));
}

#[test]
fn pair_check_rejects_non_invariant_generator() {
    let spec = data("not_invariant.json");
    let o = run(&["pair-check", "--spec", spec.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let d = diagnostic(&o);
    assert_eq!(d["error"], "not_invariant");
    assert_eq!(d["exit_code"], 2);
}

#[test]
fn strict_schema_and_bad_sources_exit_2() {
    let spec = data("unknown_key.json");
    let o = run(&["pair-check", "--spec", spec.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert_eq!(diagnostic(&o)["error"], "parse");

    let o = run(&["pair-check", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(code(&o), 2);
    assert_eq!(diagnostic(&o)["error"], "io");

    assert_eq!(code(&run(&["pair-check"])), 2);
    assert_eq!(
        code(&run(&["pair-check", "--builtin", "so2", "--spec", "x.json"])),
        2
    );
    assert_eq!(code(&run(&["pair-check", "--builtin", "so4"])), 2);
}

#[test]
fn coeffs_z2_contains_linear_term() {
    let o = run(&[
        "coeffs",
        "--builtin",
        "z2-r2",
        "--max-degree",
        "4",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["kind", "m", "index", "q"]);
    let row = rows
        .iter()
        .find(|r| r[0] == "a" && r[2] == "(0,1,0)")
        .expect("a row for J=(0,1,0)");
    assert_eq!(row[1], "2");
    let q: Value = serde_json::from_str(&row[3]).unwrap();
    assert_eq!(q["terms"].as_array().unwrap().len(), 1);
    assert_eq!(q["terms"][0]["exp"], serde_json::json!([0, 1, 0]));
    assert_eq!(q["terms"][0]["coeff"], "-1");
}

#[test]
fn coeffs_degree_zero_is_one() {
    let o = run(&[
        "coeffs",
        "--builtin",
        "so3",
        "--max-degree",
        "0",
        "--table",
        "a",
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0);
    let (_, rows) = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 1);
    let q: Value = serde_json::from_str(&rows[0][3]).unwrap();
    assert_eq!(q["terms"][0]["coeff"], "1");
}

#[test]
fn coeffs_so2_match_gamma_values() {
    let o = run(&["coeffs", "--builtin", "so2", "--max-degree", "8", "--table", "a"]);
    assert_eq!(code(&o), 0);
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    // (-1)^k / (4^k (k!)^2)
    let mut fact = 1i64;
    for (k, row) in rows.iter().enumerate() {
        if k > 0 {
            fact *= k as i64;
        }
        let den = 4i64.pow(k as u32) * fact * fact;
        let want = if k == 0 {
            "1".to_string()
        } else if k % 2 == 1 {
            format!("-1/{den}")
        } else {
            format!("1/{den}")
        };
        assert_eq!(row["index"], serde_json::json!([k]));
        assert_eq!(row["q"]["terms"][0]["coeff"], want.as_str(), "k={k}");
    }
}

#[test]
fn coeffs_incomplete_generators_exit_3() {
    let spec = data("so2_quartic.json");
    let o = run(&["coeffs", "--spec", spec.to_str().unwrap(), "--max-degree", "4"]);
    assert_eq!(code(&o), 3);
    let d = diagnostic(&o);
    assert_eq!(d["error"], "incomplete_generators");
    assert!(d["message"].as_str().unwrap().contains("x^(2,0)"));
}

#[test]
fn coeffs_are_deterministic_and_manifested() {
    let tmp = tempfile::tempdir().unwrap();
    let spec = data("z2_defaults.json");
    let mut digests = Vec::new();
    for run_dir in ["one", "two"] {
        let dir = tmp.path().join(run_dir);
        let o = run(&[
            "coeffs",
            "--spec",
            spec.to_str().unwrap(),
            "--format",
            "csv",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0);
        let bytes = std::fs::read(dir.join("coeffs.csv")).unwrap();
        let manifest = read_json(&dir.join("manifest.json"));
        assert_eq!(manifest["command"], "coeffs");
        assert_eq!(manifest["parameters"]["max_degree"], 6);
        assert_eq!(manifest["defaulted"], serde_json::json!([]));
        let out = &manifest["outputs"][0];
        assert_eq!(out["path"], "coeffs.csv");
        assert_eq!(out["sha256"], hex::encode(Sha256::digest(&bytes)));
        digests.push((bytes, manifest["inputs"].clone(), out["sha256"].clone()));
    }
    assert_eq!(digests[0], digests[1]);

    let dir = tmp.path().join("flag");
    let o = run(&[
        "coeffs",
        "--spec",
        spec.to_str().unwrap(),
        "--max-degree",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        read_json(&dir.join("manifest.json"))["parameters"]["max_degree"],
        2
    );
}

#[test]
fn verify_eigen_has_zero_residual() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify",
        "--builtin",
        "z2-r2",
        "--suite",
        "eigen",
        "--max-degree",
        "20",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let r = read_json(&tmp.path().join("verify_eigen.json"));
    assert_eq!(r["pass"], true);
    assert_eq!(r["max_residual"], "0");
    assert_eq!(r["results"].as_array().unwrap().len(), 3);
}

#[test]
fn verify_symmetry_so2() {
    let o = run(&["verify", "--builtin", "so2", "--suite", "symmetry"]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(r["max_defect"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn verify_special_both_outcomes() {
    let o = run(&[
        "verify",
        "--builtin",
        "so3",
        "--suite",
        "special",
        "--max-degree",
        "12",
    ]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["verdict"]["holds"], true);
    assert_eq!(r["max_diff"], "0");

    let o = run(&[
        "verify",
        "--builtin",
        "z2-r2",
        "--suite",
        "special",
        "--max-degree",
        "12",
    ]);
    assert_eq!(code(&o), 0);
    let r: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["verdict"]["J"], serde_json::json!([1, 0, 1]));
    assert_eq!(r["verdict"]["J_prime"], serde_json::json!([0, 2, 0]));
}

#[test]
fn verify_schwarz_z2_bump() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify",
        "--builtin",
        "z2-r2",
        "--suite",
        "schwarz",
        "--function",
        "bump",
        "--quad-radius",
        "1",
        "--quad-nodes",
        "64",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = read_json(&tmp.path().join("verify_schwarz.json"));
    assert!(r["max_abs_error"].as_f64().unwrap() <= 1e-6);
    assert_eq!(r["points"].as_array().unwrap().len(), 100);
    let m = read_json(&tmp.path().join("manifest.json"));
    assert_eq!(m["parameters"]["quad_radius"], 1.0);
    assert_eq!(m["parameters"]["quad_nodes"], 64);
    assert_eq!(m["defaulted"], serde_json::json!(["max_degree", "tol"]));
}

#[test]
fn verify_tolerance_violation_exits_1_with_worst_point() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify",
        "--builtin",
        "so2",
        "--suite",
        "symmetry",
        "--tol",
        "0",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    assert_eq!(diagnostic(&o)["error"], "tolerance");
    let r = read_json(&tmp.path().join("verify_symmetry.json"));
    assert_eq!(r["pass"], false);
    assert!(r["worst"]["defect"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_schwarz_rejects_unbounded_support() {
    let o = run(&[
        "verify",
        "--builtin",
        "so2",
        "--suite",
        "schwarz",
        "--function",
        "gaussian",
    ]);
    assert_eq!(code(&o), 2);
    assert_eq!(diagnostic(&o)["error"], "support_violation");
}

fn demo_grid(name: &str) -> Vec<Vec<f64>> {
    let o = run(&["demo", name, "--format", "csv"]);
    assert_eq!(code(&o), 0);
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header.last().unwrap(), "abs_diff");
    rows.iter()
        .map(|r| r.iter().map(|v| v.parse().unwrap()).collect())
        .collect()
}

fn bessel_j0(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= -(z * z) / (4.0 * (k * k) as f64);
        sum += term;
    }
    sum
}

#[test]
fn demo_so2_is_bessel_profile() {
    for row in demo_grid("so2") {
        let (s, h_re, h_im) = (row[0], row[5], row[6]);
        assert!((h_re - bessel_j0(s.abs())).abs() <= 1e-10, "s={s}");
        assert!(h_im.abs() <= 1e-10);
    }
}

#[test]
fn demo_trivial_columns_agree() {
    for row in demo_grid("trivial") {
        assert!(row[7] <= 1e-14, "{row:?}");
    }
}

#[test]
fn demo_z2_within_tolerance_and_files_written() {
    for row in demo_grid("z2-r2") {
        assert!(row[7] <= 1e-10);
    }
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["demo", "so3", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let terms = read_json(&tmp.path().join("h_terms.json"));
    assert_eq!(terms["M"], 30);
    let manifest = read_json(&tmp.path().join("manifest.json"));
    let paths: Vec<&str> = manifest["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|o| o["path"].as_str().unwrap())
        .collect();
    assert_eq!(paths, ["grid.json", "h_terms.json"]);
}

#[test]
fn demo_unknown_name_exits_2() {
    let o = run(&["demo", "so7"]);
    assert_eq!(code(&o), 2);
    assert_eq!(diagnostic(&o)["error"], "invalid_parameter");
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use invkit::invariance::{build_stacked, max_scaling, ProblemData};
use invkit::oracle::random_box_problem;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn invkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_invkit")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

/// Output with the timestamp line removed.
fn stable(text: &str) -> String {
    text.lines().filter(|l| !l.starts_with("# generated")).collect::<Vec<_>>().join("\n")
}

/// Data rows of a CSV section: everything after the first non-comment line.
fn data_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn alpha_on_scalar_fixture_is_one() {
    let out = invkit(&["alpha", "--input", fixture("scalar_1d.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["alpha"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
    let star = json(&invkit(&["oracle-alpha", "--input", fixture("scalar_1d.json").to_str().unwrap()]));
    assert!((star["alpha_star"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
}

#[test]
fn certify_reports_certificate_shapes() {
    let path = fixture("double_integrator.json");
    let out = invkit(&["certify", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let problem: ProblemData = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let s = build_stacked(&problem).unwrap();
    assert_eq!(v["t_shape"], serde_json::json!([s.num_rows(), s.n_h]));
    assert_eq!(v["m_shape"], serde_json::json!([s.nbar(), s.nbar()]));
    assert_eq!(v["certificate"]["t"].as_array().unwrap().len(), s.num_rows());
}

#[test]
fn certify_without_certificate_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(fixture("scalar_1d.json")).unwrap();
    let mut v: Value = serde_json::from_str(&text).unwrap();
    v["input_set"]["d"] = serde_json::json!([0.4, 0.4]);
    let path = dir.path().join("weak.json");
    fs::write(&path, v.to_string()).unwrap();
    let out = invkit(&["certify", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["status"], "not-found");
}

#[test]
fn membership_exit_codes() {
    let path = fixture("double_integrator.json");
    let p = path.to_str().unwrap();
    let inside = invkit(&["member", "--input", p, "--point", "0,0"]);
    assert_eq!(inside.status.code(), Some(0));
    let v = json(&inside);
    assert_eq!(v["inside"], true);
    assert!(!v["branches"].as_array().unwrap().is_empty());
    let outside = invkit(&["member", "--input", p, "--point", "50,-1"]);
    assert_eq!(outside.status.code(), Some(2));
    assert_eq!(json(&outside)["inside"], false);
}

#[test]
fn ray_hits_the_boundary() {
    let p = fixture("double_integrator.json");
    let p = p.to_str().unwrap();
    let v = json(&invkit(&["ray", "--input", p, "--direction", "1,-1"]));
    let r = v["r"].as_f64().unwrap();
    assert!(r > 0.0);
    let probe = |s: f64| format!("{},{}", s * r, -s * r);
    assert_eq!(invkit(&["member", "--input", p, "--point", &probe(0.999)]).status.code(), Some(0));
    assert_eq!(invkit(&["member", "--input", p, "--point", &probe(1.001)]).status.code(), Some(2));
}

#[test]
fn malformed_input_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(&path, "{\n  \"A\": [[1.0]],\n  \"B\": nope\n}").unwrap();
    let out = invkit(&["alpha", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("schema error") && err.contains("line 3"), "{err}");
}

#[test]
fn lp_dump_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("alpha.lp");
    let out = invkit(&[
        "alpha",
        "--input",
        fixture("scalar_1d.json").to_str().unwrap(),
        "--dump-lp",
        dump.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dump).unwrap();
    assert!(text.starts_with("vars "));
    assert!(text.lines().any(|l| l.contains("<=")));
}

#[test]
fn bench_ex1_is_reproducible_and_recomputable() {
    let args = ["bench-ex1", "--n-range", "2..3", "--per-dim", "3", "--seed", "5", "--no-timing"];
    let one = invkit(&[&args[..], &["--workers", "1"]].concat());
    let two = invkit(&[&args[..], &["--workers", "3"]].concat());
    assert_eq!(one.status.code(), Some(0));
    let (a, b) = (String::from_utf8(one.stdout).unwrap(), String::from_utf8(two.stdout).unwrap());
    assert_eq!(stable(&a), stable(&b));
    assert!(a.starts_with("# invkit bench-ex1 schema v1"));

    let (rows_text, hist_text) = a.split_once("\n\n").unwrap();
    let rows = data_rows(rows_text);
    assert_eq!(rows.len(), 6);
    for row in &rows {
        let (seed, n, horizon): (u64, usize, usize) = (row[1].parse().unwrap(), row[2].parse().unwrap(), row[4].parse().unwrap());
        let alpha: f64 = row[5].parse().unwrap();
        let star: f64 = row[6].parse().unwrap();
        assert!(alpha <= star * (1.0 + 1e-6));
        assert!(row[7].parse::<f64>().unwrap() >= 0.0);
        let problem = random_box_problem(n, horizon, seed).unwrap();
        let again = max_scaling(&problem).unwrap().into_certificate().unwrap().alpha;
        assert_eq!(again, alpha);
    }
    let hist = data_rows(hist_text);
    let total: usize = hist.iter().map(|r| r[2].parse::<usize>().unwrap()).sum();
    assert_eq!(total, 6);
}

#[test]
fn bench_ex2_from_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("ex2.csv");
    let bench = fixture("bench_seed2024.json");
    let run = || {
        invkit(&[
            "bench-ex2",
            "--bench",
            bench.to_str().unwrap(),
            "--N",
            "5",
            "--rays",
            "4",
            "--dichotomy-rays",
            "1",
            "--no-timing",
            "--output",
            out_path.to_str().unwrap(),
        ])
    };
    assert_eq!(run().status.code(), Some(0));
    let first = fs::read_to_string(&out_path).unwrap();
    assert_eq!(run().status.code(), Some(0));
    assert_eq!(stable(&first), stable(&fs::read_to_string(&out_path).unwrap()));

    assert!(first.contains("index,r_sigma,r_omega_N5,ratio_N5,r_dichotomy_N5"));
    let rows = data_rows(&first);
    assert_eq!(rows.len(), 4);
    for row in &rows {
        let ratio: f64 = row[3].parse().unwrap();
        assert!(ratio > 0.0 && ratio <= 1.0 + 1e-6);
    }
    let dich: f64 = rows[0][4].parse().unwrap();
    let r: f64 = rows[0][2].parse().unwrap();
    assert!((dich - r).abs() <= 1e-5 * r);
    assert!(rows[1][4].is_empty());

    let hist = fs::read_to_string(dir.path().join("ex2_hist.csv")).unwrap();
    assert!(hist.contains("N,bin_left,bin_right,count"));
    let total: usize = data_rows(&hist).iter().map(|r| r[3].parse::<usize>().unwrap()).sum();
    assert_eq!(total, 4);
}

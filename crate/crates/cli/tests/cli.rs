#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const A0_PC12: f64 = 0.72701484502919798357;
const HEADER: &[u8] = b"phi,f,Q,U,weighted_potential\n";

fn capfield(args: &[&str]) -> Output {
    capfield_env(args, &[])
}

fn capfield_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_capfield"));
    cmd.args(args).env_remove("CAPFIELD_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&o.stdout),
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn schema() -> jsonschema::Validator {
    let raw = include_str!("../schema/summary.schema.json");
    jsonschema::validator_for(&serde_json::from_str(raw).unwrap()).unwrap()
}

fn assert_valid(v: &Value) {
    let errors: Vec<String> = schema().iter_errors(v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?} in {v}");
}

fn num(v: &Value, key: &str) -> f64 {
    v[key]
        .as_f64()
        .unwrap_or_else(|| panic!("{key} missing in {v}"))
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn support_of_a_point_charge() {
    let o = capfield(&["support", "--field", "point-charge", "--q", "1", "--h", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_valid(&v);
    assert_eq!(v["method"], "TranscendentalRoot");
    assert!((num(&v, "alpha0") - A0_PC12).abs() < 1e-12);
    assert!(v["residuals"]["support"].as_f64().unwrap().abs() <= 1e-12);
}

#[test]
fn capacity_of_the_half_sphere() {
    let o = capfield(&["capacity", "--alpha", "1.5707963267948966"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("0.818309886"));
    let v = json(&o);
    assert_valid(&v);
    assert!((num(&v, "capacity") - (0.5 + 1.0 / PI)).abs() < 1e-15);
}

#[test]
fn gonchar_heights_for_unit_charge() {
    let o = capfield(&["gonchar", "--q", "1"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_valid(&v);
    let golden_sq = (3.0 + 5f64.sqrt()) / 2.0;
    assert!((num(&v, "h_plus") - golden_sq).abs() < 1e-12);
    assert!((num(&v, "h_minus") - 0.2192235935955849).abs() < 1e-12);
}

#[test]
fn zero_field_density_table() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let args = [
        "density",
        "--field",
        "zero",
        "--alpha",
        "1.0471975511965976",
        "--nodes",
        "8",
        "--csv",
        path_str(&csv),
    ];
    let o = capfield(&args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_valid(&json(&o));
    let bytes = std::fs::read(&csv).unwrap();
    assert!(bytes.starts_with(HEADER));
    assert!(!bytes.contains(&b'\r'));
    let text = String::from_utf8(bytes.clone()).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().all(|r| r.len() == 5));
    let w: Vec<f64> = rows.iter().map(|r| r[4]).collect();
    let spread =
        w.iter().cloned().fold(f64::MIN, f64::max) - w.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread < 1e-4, "spread {spread}");
    for r in &rows {
        assert_eq!(r[4], r[3] + r[2]);
    }

    // a rerun is byte-identical, table and summary alike
    let csv2 = dir.path().join("d2.csv");
    let mut again = args;
    again[8] = path_str(&csv2);
    let o2 = capfield(&again);
    assert_eq!(std::fs::read(&csv2).unwrap(), bytes);
    assert_eq!(o2.stdout, o.stdout);
}

#[test]
fn tables_from_every_table_command_share_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [&[&str]; 3] = [
        &[
            "density",
            "--field",
            "point-charge",
            "--q",
            "1",
            "--h",
            "2",
            "--nodes",
            "6",
        ],
        &[
            "verify",
            "--field",
            "quadratic",
            "--a",
            "1",
            "--b",
            "2.5",
            "--c",
            "2",
            "--nodes",
            "6",
        ],
        &[
            "oracle",
            "--field",
            "point-charge",
            "--q",
            "1",
            "--h",
            "2",
            "--kind",
            "nystrom",
            "--n",
            "32",
        ],
    ];
    for (i, args) in cases.iter().enumerate() {
        let csv = dir.path().join(format!("{i}.csv"));
        let mut a = args.to_vec();
        a.extend(["--csv", path_str(&csv)]);
        let o = capfield(&a);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
        assert_valid(&json(&o));
        let bytes = std::fs::read(&csv).unwrap();
        assert!(bytes.starts_with(HEADER), "{args:?}");
        let text = String::from_utf8(bytes).unwrap();
        assert!(text.lines().skip(1).all(|l| l.split(',').count() == 5));
    }
}

#[test]
fn every_summary_matches_the_schema() {
    let table = tempfile::NamedTempFile::new().unwrap();
    let mut rows = String::from("x3,Q\n");
    for i in 0..=200 {
        let x = -1.0 + 2.0 * i as f64 / 200.0;
        rows.push_str(&format!("{x},{}\n", 0.5 * x * x));
    }
    std::fs::write(table.path(), rows).unwrap();
    let t = path_str(table.path());
    let cases: Vec<Vec<&str>> = vec![
        vec!["capacity", "--alpha", "0"],
        vec!["capacity", "--alpha", "3.141592653589793", "--timings"],
        vec!["gonchar", "--q", "0.25"],
        vec!["support", "--field", "zero"],
        vec!["support", "--field", "point-charge", "--q", "1", "--h", "1"],
        vec![
            "support",
            "--field",
            "quadratic",
            "--a",
            "1",
            "--b",
            "2.5",
            "--c",
            "2",
            "--method",
            "minimize",
        ],
        vec!["support", "--field", "tabulated", "--table", t],
        vec![
            "ffunctional",
            "--field",
            "point-charge",
            "--q",
            "1",
            "--h",
            "2",
            "--alpha",
            "1",
            "--numeric",
        ],
        vec![
            "density",
            "--field",
            "point-charge",
            "--q",
            "0.5",
            "--h",
            "2.2",
            "--nodes",
            "5",
        ],
        vec![
            "density",
            "--field",
            "tabulated",
            "--table",
            t,
            "--nodes",
            "5",
        ],
        vec![
            "verify",
            "--field",
            "zero",
            "--alpha",
            "0.5",
            "--conductor",
            "0.5",
            "--nodes",
            "5",
        ],
        vec![
            "oracle",
            "--field",
            "point-charge",
            "--q",
            "1",
            "--h",
            "2",
            "--kind",
            "energy",
            "--n",
            "32",
        ],
    ];
    for args in cases {
        let o = capfield(&args);
        assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
        let v = json(&o);
        assert_valid(&v);
        let timed = args.contains(&"--timings");
        assert_eq!(
            v["timings"].as_object().unwrap().is_empty(),
            !timed,
            "{args:?}"
        );
    }
    // the schema is not vacuous
    assert!(!schema().is_valid(&serde_json::json!({"command": "support", "timings": {}})));
    assert!(!schema().is_valid(&serde_json::json!({"command": "capacity", "alpha0": 1.0, "capacity": 0.5, "timings": {}, "extra": 1})));
}

#[test]
fn invalid_input_exits_2() {
    let cases: [&[&str]; 8] = [
        &["capacity", "--alpha", "90deg"],
        &["capacity", "--alpha", "90°"],
        &["capacity", "--alpha", "90"],
        &["support", "--field", "point-charge", "--q", "1"],
        &[
            "support",
            "--field",
            "point-charge",
            "--q",
            "-1",
            "--h",
            "2",
        ],
        &["support", "--field", "zero", "--q", "1"],
        &[
            "support",
            "--field",
            "tabulated",
            "--table",
            "/nonexistent/q.csv",
        ],
        &["frobnicate"],
    ];
    for args in cases {
        let o = capfield(args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty(), "{args:?}");
        assert!(!stderr(&o).is_empty());
    }
    let o = capfield(&[
        "support",
        "--field",
        "tabulated",
        "--table",
        "/nonexistent/q.csv",
    ]);
    assert!(stderr(&o).contains("/nonexistent/q.csv"));
}

#[test]
fn nonconvergence_exits_3() {
    let o = capfield(&[
        "oracle",
        "--field",
        "point-charge",
        "--q",
        "1",
        "--h",
        "2",
        "--kind",
        "energy",
        "--n",
        "32",
        "--iterations",
        "3",
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(
        stderr(&o).contains("discrete_energy_minimize"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn failed_verification_exits_1_with_a_report() {
    let o = capfield(&[
        "verify",
        "--field",
        "point-charge",
        "--q",
        "1",
        "--h",
        "2",
        "--alpha",
        "1.2",
        "--nodes",
        "6",
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    let v = json(&o);
    assert_valid(&v);
    assert_eq!(v["passed"], false);
    assert!(!v["failures"].as_array().unwrap().is_empty());
}

#[test]
fn pin_then_check() {
    let dir = tempfile::tempdir().unwrap();
    let golden = dir.path().join("golden.json");
    let g = path_str(&golden);
    let o = capfield(&[
        "support",
        "--field",
        "point-charge",
        "--q",
        "1",
        "--h",
        "2",
        "--timings",
        "--pin",
        g,
    ]);
    assert_eq!(code(&o), 0);
    let pinned: Value = serde_json::from_str(&std::fs::read_to_string(&golden).unwrap()).unwrap();
    assert!(pinned.get("timings").is_none());
    assert!((num(&pinned, "alpha0") - A0_PC12).abs() < 1e-12);

    let o = capfield(&[
        "support",
        "--field",
        "point-charge",
        "--q",
        "1",
        "--h",
        "2",
        "--check",
        g,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    // a different method is a mismatch even where the roots agree
    let o = capfield(&[
        "support",
        "--field",
        "point-charge",
        "--q",
        "1",
        "--h",
        "2",
        "--method",
        "minimize",
        "--check",
        g,
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("method"), "{}", stderr(&o));

    let mut tampered = pinned.clone();
    tampered["alpha0"] = Value::from(A0_PC12 + 1e-6);
    std::fs::write(&golden, serde_json::to_string(&tampered).unwrap()).unwrap();
    let o = capfield(&[
        "support",
        "--field",
        "point-charge",
        "--q",
        "1",
        "--h",
        "2",
        "--check",
        g,
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("alpha0"));

    std::fs::write(&golden, "not json").unwrap();
    let o = capfield(&["support", "--field", "zero", "--check", g]);
    assert_eq!(code(&o), 2);

    let o = capfield(&["capacity", "--alpha", "1", "--pin", g, "--check", g]);
    assert_eq!(code(&o), 2);
}

#[test]
fn thread_cap_from_environment() {
    let args = [
        "density",
        "--field",
        "quadratic",
        "--a",
        "1",
        "--b",
        "2.5",
        "--c",
        "2",
        "--method",
        "pipeline",
        "--nodes",
        "6",
    ];
    let base = capfield(&args);
    assert_eq!(code(&base), 0, "{}", stderr(&base));
    for n in ["1", "2"] {
        let o = capfield_env(&args, &[("CAPFIELD_THREADS", n)]);
        assert_eq!(code(&o), 0);
        assert_eq!(o.stdout, base.stdout, "CAPFIELD_THREADS={n}");
    }
    for bad in ["0", "many", "-1"] {
        let o = capfield_env(&args, &[("CAPFIELD_THREADS", bad)]);
        assert_eq!(code(&o), 2, "CAPFIELD_THREADS={bad}");
        assert!(stderr(&o).contains("CAPFIELD_THREADS") || stderr(&o).contains("thread"));
    }
}

#[test]
fn json_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.json");
    let o = capfield(&["gonchar", "--q", "2", "--json", path_str(&out)]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&out).unwrap(), o.stdout);

    let o = capfield(&[
        "gonchar",
        "--q",
        "2",
        "--csv",
        path_str(&dir.path().join("x.csv")),
    ]);
    assert_eq!(code(&o), 2);

    let o = capfield(&["gonchar", "--q", "2", "--json", "/nonexistent/dir/s.json"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("/nonexistent/dir/s.json"));
}

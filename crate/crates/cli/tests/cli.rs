use std::f64::consts::LN_2;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::{NamedTempFile, TempDir};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infoscape")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json_of(o: &Output) -> Value {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

fn file(ext: &str, body: &str) -> NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
    f.write_all(body.as_bytes()).unwrap();
    f
}

fn path(f: &NamedTempFile) -> &str {
    f.path().to_str().unwrap()
}

fn nats(v: &Value) -> f64 {
    v["nats"].as_f64().unwrap()
}

fn xor_csv() -> NamedTempFile {
    file(".csv", "s,x,y,p\n0,0,0,0.25\n0,1,1,0.25\n1,0,1,0.25\n1,1,0,0.25\n")
}

/// `P(s)P(x|s)P(y|s)` written as a CSV table.
fn shuffle_csv(ps: [f64; 2], px: [f64; 2], py: [f64; 2]) -> NamedTempFile {
    let mut body = String::from("s,x,y,p\n");
    for s in 0..2 {
        for x in 0..2 {
            for y in 0..2 {
                let a = if x == 0 { px[s] } else { 1.0 - px[s] };
                let b = if y == 0 { py[s] } else { 1.0 - py[s] };
                body += &format!("{s},{x},{y},{:?}\n", ps[s] * a * b);
            }
        }
    }
    file(".csv", &body)
}

#[test]
fn analyze_xor_fixture() {
    let f = xor_csv();
    let r = json_of(&run(&["analyze", path(&f)]));
    assert_eq!(r["schema"], 1);
    assert_eq!(r["command"], "analyze");
    assert!((nats(&r["pid"]["ci"]) - LN_2).abs() < 1e-6);
    for k in ["si", "ui_x", "ui_y"] {
        assert!(nats(&r["pid"][k]).abs() < 1e-6);
    }
    assert!((r["pid"]["ci"]["bits"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert_eq!(r["minimizer"]["location"], "non_unique_segment");
}

#[test]
fn analyze_shuffle_fixture_has_no_correlation_terms() {
    let f = shuffle_csv([0.4, 0.6], [0.2, 0.7], [0.3, 0.6]);
    let r = json_of(&run(&["analyze", path(&f)]));
    assert!(nats(&r["series"]["i_ci"]).abs() < 1e-12);
    assert!(nats(&r["series"]["i_cd"]).abs() < 1e-12);
    assert!((nats(&r["pid"]["ci"]) - nats(&r["translation"]["ci0"])).abs() < 1e-9);
    assert_eq!(r["discriminant"]["applicable"], true);
    let interior = r["discriminant"]["interior"].as_bool().unwrap();
    assert_eq!(interior, r["minimizer"]["location"] == "interior");
}

#[test]
fn analyze_accepts_json_and_csv_output() {
    let f = file(
        ".json",
        r#"[{"s":0,"x":0,"y":0,"p":0.25},{"s":0,"x":1,"y":1,"p":0.25},{"s":1,"x":0,"y":1,"p":0.25},{"s":1,"x":1,"y":0,"p":0.25}]"#,
    );
    let r = json_of(&run(&["analyze", path(&f)]));
    assert!((nats(&r["pid"]["ci"]) - LN_2).abs() < 1e-6);
    let o = run(&["--format", "csv", "analyze", path(&f)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("key,value\nschema,1\n"));
    assert!(text.contains("pid.ci.nats,"));
}

#[test]
fn malformed_input_exits_2_with_line_number() {
    let f = file(".csv", "s,x,y,p\n0,0,0,0.5\n1,1,oops,0.5\n");
    let o = run(&["analyze", path(&f)]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(":3:"), "{err}");
    assert_eq!(code(&run(&["analyze", "/nonexistent/file.csv"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
}

#[test]
fn invalid_distributions_exit_3() {
    let f = file(".csv", "s,x,y,p\n0,0,0,0.5\n1,1,1,0.6\n");
    assert_eq!(code(&run(&["analyze", path(&f)])), 3);
    let o = run(&["analyze", "--renormalize", path(&f)]);
    assert_eq!(code(&o), 0);
    let f = file(".csv", "s,x,y,p\n0,0,0,-0.5\n1,1,1,1.5\n");
    assert_eq!(code(&run(&["analyze", path(&f)])), 3);
}

#[test]
fn non_convergence_exits_4() {
    let mut body = String::from("s,x,y,p\n");
    let mut k = 0u32;
    for s in 0..2 {
        for x in 0..3 {
            for y in 0..3 {
                k += 1;
                body += &format!("{s},{x},{y},{}\n", (k as f64) / 171.0);
            }
        }
    }
    let f = file(".csv", &body);
    let o = run(&["--tol", "0", "--max-iters", "5", "analyze", path(&f)]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

fn parse_grid(text: &str) -> Vec<Vec<f64>> {
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "i1,i2,t1,t2,i_nats,i_bits");
    lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn landscape_of_independent_marginals_vanishes_on_the_diagonal() {
    let dir = TempDir::new().unwrap();
    let sx = dir.path().join("sx.csv");
    let sy = dir.path().join("sy.csv");
    std::fs::write(&sx, "s,x,p\n0,0,0.18\n0,1,0.42\n1,0,0.12\n1,1,0.28\n").unwrap();
    std::fs::write(&sy, "s,y,p\n0,0,0.33\n0,1,0.27\n1,0,0.22\n1,1,0.18\n").unwrap();
    let o = run(&["landscape", "--sx", sx.to_str().unwrap(), "--sy", sy.to_str().unwrap(), "--grid", "101"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = parse_grid(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 101 * 101);
    let diagonal: Vec<&Vec<f64>> = rows.iter().filter(|r| r[0] == r[1]).collect();
    assert_eq!(diagonal.len(), 101);
    assert!(diagonal.iter().all(|r| r[4] < 1e-12));
}

#[test]
fn landscape_minimum_is_bounded_by_the_optimizer() {
    let f = shuffle_csv([0.5, 0.5], [0.2, 0.7], [0.3, 0.8]);
    let o = run(&["landscape", "--joint", path(&f), "--grid", "41"]);
    let rows = parse_grid(&String::from_utf8(o.stdout).unwrap());
    let grid_min = rows.iter().map(|r| r[4]).fold(f64::INFINITY, f64::min);
    let r = json_of(&run(&["analyze", path(&f)]));
    assert!(grid_min >= nats(&r["minimizer"]["i_star"]) - 1e-6);

    let j = json_of(&run(&["--format", "json", "landscape", "--joint", path(&f), "--grid", "5"]));
    assert_eq!(j["rows"].as_array().unwrap().len(), 25);
    assert_eq!(code(&run(&["landscape", "--joint", path(&f), "--grid", "1"])), 2);
}

#[test]
fn landscape_needs_binary_responses() {
    let f = file(".csv", "s,x,y,p\n0,0,0,0.25\n0,2,1,0.25\n1,1,1,0.25\n1,0,0,0.25\n");
    assert_eq!(code(&run(&["landscape", "--joint", path(&f)])), 3);
}

fn interval_strings(r: &Value) -> Vec<String> {
    r["slope_set"]["intervals"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect()
}

#[test]
fn discriminant_examples() {
    let r = json_of(&run(&["discriminant", "--p", "0.25,0.25"]));
    let iv = interval_strings(&r);
    assert_eq!(iv[0], "[-inf, -3)");
    assert!(iv[1].starts_with("(-0.333333333333333"), "{iv:?}");
    assert!(iv[1].ends_with(", 1)"), "{iv:?}");
    assert_eq!(iv[2], "(1, inf]");
    assert!((r["region"]["area"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-12);

    let r = json_of(&run(&["discriminant", "--p", "0.5,0.5"]));
    let iv = interval_strings(&r);
    assert_eq!(iv, ["[-inf, -1)", "(-1, 1)", "(1, inf]"]);
    assert!((r["region"]["area"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let r = json_of(&run(&["discriminant", "--p", "0.2,0.4", "--q", "0.3,0.9"]));
    assert_eq!(r["verdict"]["interior"], true);
    assert_eq!(r["region"]["boundary_points"].as_array().unwrap().len(), 4);
    assert_eq!(r["region"]["polygon"].as_array().unwrap().len(), 12);
    let r = json_of(&run(&["discriminant", "--p", "0.2,0.4", "--q", "0.3,0.5"]));
    assert_eq!(r["verdict"]["interior"], false);

    assert_eq!(code(&run(&["discriminant", "--p", "0,0.5"])), 3);
    assert_eq!(code(&run(&["discriminant", "--p", "0.2,0.4", "--q", "1,0.5"])), 3);
}

#[test]
fn volume_reports_exact_and_reproducible_estimates() {
    let a = run(&["volume", "--seed", "1"]);
    let r = json_of(&a);
    assert!((r["exact"]["value"].as_f64().unwrap() - 0.666667).abs() < 1e-6);
    assert!((r["monte_carlo"]["value"].as_f64().unwrap() - 2.0 / 3.0).abs() < 0.005);
    assert_eq!(r["seed"], 1);
    let b = run(&["volume", "--seed", "1"]);
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["volume", "--seed", "2", "--samples", "20000", "--workers", "3"]);
    let d = run(&["volume", "--seed", "2", "--samples", "20000", "--workers", "3"]);
    assert_eq!(c.stdout, d.stdout);
    let s = json_of(&run(&["volume", "--seed", "1", "--samples", "20000", "--measure", "simplex"]));
    assert!(s["exact"].is_null());
    assert_eq!(s["measure"], "simplex");
    assert_eq!(code(&run(&["volume"])), 2);
}

#[test]
fn gaussian_examples() {
    let r = json_of(&run(&["gaussian", "1", "1", "1", ".5", ".5"]));
    assert_eq!(r["scan"]["location"], "boundary");
    assert_eq!(r["scan"]["domain"], serde_json::json!([-0.5, 1.0]));
    let r = json_of(&run(&["gaussian", "1", "1", "1", "0", "0"]));
    assert_eq!(r["scan"]["location"], "interior");
    assert_eq!(r["scan"]["t_star"].as_f64().unwrap(), 0.0);
    assert!(nats(&r["scan"]["i_star"]).abs() < 1e-15);
    let r = json_of(&run(&["gaussian", "1", "1", "1", "-0.5", "0.2"]));
    assert!(r["scan"]["domain"][0].as_f64().unwrap() < 0.0);
    assert_eq!(code(&run(&["gaussian", "1", "1", "1", "2", "0"])), 3);
}

#[test]
fn json_reports_round_trip() {
    let f = xor_csv();
    let outputs = [
        run(&["analyze", path(&f)]),
        run(&["discriminant", "--p", "0.2,0.4", "--q", "0.6,0.1"]),
        run(&["gaussian", "1", "2", "3", "0.4", "0.7"]),
        run(&["volume", "--seed", "3", "--samples", "1000"]),
    ];
    for o in outputs {
        let text = String::from_utf8(o.stdout).unwrap();
        let v: Value = serde_json::from_str(&text).unwrap();
        let mut again = serde_json::to_string_pretty(&v).unwrap();
        again.push('\n');
        assert_eq!(again, text);
    }
}

#[test]
fn reports_contain_only_expected_nulls() {
    fn walk(v: &Value, path: &str, nulls: &mut Vec<String>) {
        match v {
            Value::Null => nulls.push(path.to_string()),
            Value::Array(a) => a.iter().enumerate().for_each(|(i, x)| walk(x, &format!("{path}[{i}]"), nulls)),
            Value::Object(m) => m.iter().for_each(|(k, x)| walk(x, &format!("{path}.{k}"), nulls)),
            _ => {}
        }
    }
    let f = shuffle_csv([0.3, 0.7], [0.1, 0.6], [0.45, 0.2]);
    let mut nulls = Vec::new();
    walk(&json_of(&run(&["analyze", path(&f)])), "", &mut nulls);
    assert!(nulls.iter().all(|p| p == ".minimizer.certificate.corner_pattern"), "{nulls:?}");
}

#[test]
fn help_exits_cleanly() {
    assert_eq!(code(&run(&["--help"])), 0);
    assert!(Path::new(env!("CARGO_BIN_EXE_infoscape")).exists());
}

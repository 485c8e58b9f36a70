use std::path::PathBuf;
use std::process::{Command, Output};

use monopole_boundary::geom::BoundaryPoint;
use serde_json::Value;

fn mono() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mono"));
    cmd.env_remove("MONO_CONFIG");
    cmd
}

fn run(args: &[&str]) -> Output {
    mono().args(args).output().expect("spawn mono")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("invalid JSON ({e}); stderr: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mono-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn without_timings(mut v: Value) -> Value {
    v["diagnostics"].as_object_mut().unwrap().remove("timings");
    v
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses a CSV file, re-emits every record from the parsed values and
/// returns (original, re-emitted).
fn reemit(path: &std::path::Path, columns: &dyn Fn(usize, &str) -> String) -> (String, String) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    let mut out = header.join(",") + "\n";
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let cells: Vec<String> = rec.iter().enumerate().map(|(i, s)| columns(i, s)).collect();
        out += &(cells.join(",") + "\n");
    }
    (text, out)
}

fn float_cell(_: usize, s: &str) -> String {
    fmt(s.parse::<f64>().unwrap())
}

#[test]
fn abelian_two_point_is_one() {
    let out = run(&["npoint", "--field", "abelian", "--mass", "1", "--points", "0,1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let v = &r["results"][0];
    assert!((v["value"]["re"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(v["value"]["im"].as_f64().unwrap().abs() < 1e-6);
    assert!(v["err"].as_f64().is_some());
}

#[test]
fn coincident_points_reduce_to_one() {
    let out = run(&["npoint", "--field", "hedgehog", "--mass", "1", "--points", "0,0"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let v = &r["results"][0]["value"];
    assert_eq!(v["re"].as_f64(), Some(1.0));
    assert_eq!(v["reduced"].as_bool(), Some(true));
    assert_eq!(v["reduced_len"].as_u64(), Some(1));
    let notes = r["diagnostics"]["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().contains("coalescent")));
}

#[test]
fn report_schema() {
    let out = run(&["npoint", "--points", "0.5-0.2i,1,inf", "--points", "0,1"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["schema_version"].as_u64(), Some(1));
    assert_eq!(r["command"].as_str(), Some("npoint"));
    assert_eq!(r["params"]["config"]["field"].as_str(), Some("hedgehog"));
    for rec in r["results"].as_array().unwrap() {
        assert!(rec["err"].is_number(), "{rec}");
    }
    let d = &r["diagnostics"];
    assert!(d["err_total"].is_number() && d["converged"].as_bool() == Some(true) && d["timings"].is_object());
}

#[test]
fn reports_are_deterministic() {
    for args in [
        &["npoint", "--points", "0.3+0.1i,-1,2i", "--seed", "4"][..],
        &["rep", "--source", "random", "--k", "2", "--seed", "7"][..],
        &["nahm", "--k", "2", "--mass", "1.5", "--seed", "3"][..],
    ] {
        let a = report(&run(args));
        let b = report(&run(args));
        let (sa, sb) = (without_timings(a).to_string(), without_timings(b).to_string());
        assert_eq!(sa, sb, "{args:?}");
    }
}

#[test]
fn scan_csv_round_trips() {
    let dir = scratch("scan");
    let path = dir.join("locus.csv");
    let out = run(&["scan", "--grid", "12", "--w-grid", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (text, again) = reemit(&path, &float_cell);
    assert!(text.starts_with("re_w,im_w,re_z,im_z,value\n"));
    assert!(text.lines().count() > 1);
    assert_eq!(text, again);
    let r = report(&out);
    let n = r["results"].as_array().unwrap().iter().find(|x| x["name"] == "locus_points").unwrap();
    assert_eq!(n["value"].as_u64().unwrap() as usize, text.lines().count() - 1);
}

#[test]
fn npoint_and_boundary_csv_round_trip() {
    let dir = scratch("csv");
    let np = dir.join("np.csv");
    let out = run(&["npoint", "--points", "0,1,inf", "--points", "0.5-0.25i,2", "--out", np.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let point_or_float = |i: usize, s: &str| -> String {
        if i < 3 {
            if s.is_empty() {
                String::new()
            } else {
                s.parse::<BoundaryPoint>().unwrap().to_string()
            }
        } else {
            fmt(s.parse::<f64>().unwrap())
        }
    };
    let (text, again) = reemit(&np, &point_or_float);
    assert!(text.starts_with("z1,z2,z3,re,im,err\n"));
    assert_eq!(text, again);

    let map = dir.join("map.csv");
    let out = run(&["boundary", "--w", "0.5+0.2i", "--grid", "8", "--radius", "1", "--out", map.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let (text, again) = reemit(&map, &float_cell);
    assert!(text.starts_with("re_z,im_z,re_lambda,im_lambda,F\n"));
    assert_eq!(text, again);
}

#[test]
fn invalid_input_exits_two() {
    for args in [
        &["npoint", "--points", "0,banana"][..],
        &["npoint", "--points", "0,1", "--grid", "4"][..],
        &["npoint", "--points", "0,1", "--mass", "-1"][..],
        &["npoint", "--points", "0,1", "--field", "dyon"][..],
        &["nahm", "--mass", "1"][..],
        &["scan", "--field", "from-nahm", "--mass", "1.5"][..],
        &["frobnicate"][..],
        &[][..],
    ] {
        assert_eq!(run(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn degenerate_nahm_exits_three() {
    let out = run(&["verify", "nahm", "--k", "1", "--mass", "0.5"]);
    assert_eq!(out.status.code(), Some(3));
    let r = report(&out);
    assert_eq!(r["diagnostics"]["converged"].as_bool(), Some(false));
    let names: Vec<&str> = r["results"].as_array().unwrap().iter().map(|x| x["name"].as_str().unwrap()).collect();
    assert!(names.iter().any(|n| n.contains("degeneracy")), "{names:?}");
    assert_eq!(run(&["nahm", "--k", "1", "--mass", "0.5"]).status.code(), Some(3));
}

#[test]
fn verify_scatter_passes() {
    let out = run(&["verify", "scatter"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let checks = r["results"].as_array().unwrap();
    assert!(!checks.is_empty());
    for c in checks {
        assert_eq!(c["pass"].as_bool(), Some(true), "{c}");
        assert!(c["tol"].is_number() && c["err"].is_number());
    }
}

#[test]
fn verify_nahm_and_rep_pass() {
    for suite in ["nahm", "rep"] {
        assert_eq!(run(&["verify", suite]).status.code(), Some(0), "{suite}");
    }
}

#[test]
fn config_file_environment_and_flags() {
    let dir = scratch("config");
    let path = dir.join("run.conf");
    std::fs::write(&path, "# test run\nfield = abelian\nmass = 2\nseed = 9\n").unwrap();
    let args = ["npoint", "--points", "0,1"];

    let env = report(&mono().env("MONO_CONFIG", &path).args(args).output().unwrap());
    assert_eq!(env["params"]["config"]["field"].as_str(), Some("abelian"));
    assert_eq!(env["params"]["config"]["mass"].as_f64(), Some(2.0));
    assert_eq!(env["params"]["config"]["seed"].as_u64(), Some(9));

    let flag = report(&mono().arg("--config").arg(&path).args(args).args(["--mass", "3"]).output().unwrap());
    assert_eq!(flag["params"]["config"]["field"].as_str(), Some("abelian"));
    assert_eq!(flag["params"]["config"]["mass"].as_f64(), Some(3.0));

    let over = report(&mono().env("MONO_CONFIG", &path).args(args).args(["--field", "hedgehog"]).output().unwrap());
    assert_eq!(over["params"]["config"]["field"].as_str(), Some("hedgehog"));

    let bad = dir.join("bad.conf");
    std::fs::write(&bad, "colour = blue\n").unwrap();
    assert_eq!(mono().env("MONO_CONFIG", &bad).args(args).output().unwrap().status.code(), Some(2));
    assert_eq!(mono().arg("--config").arg(dir.join("missing.conf")).args(args).output().unwrap().status.code(), Some(2));
}

#[test]
fn from_nahm_trace_representation() {
    let out = run(&["npoint", "--field", "from-nahm", "--charge", "2", "--mass", "1.5", "--points", "0,1", "--points", "0,0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out);
    let first = r["results"][0]["value"]["re"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&first));
    assert_eq!(r["results"][1]["value"]["re"].as_f64(), Some(1.0));
}

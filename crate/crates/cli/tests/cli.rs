use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rankob(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rankob"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn jsonl(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn build_desk_and_toy() {
    let out = rankob(&["build"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["params"]["m"], 3);
    assert_eq!(v["params"]["k"], 4);
    assert_eq!(v["layout"]["centers"].as_array().unwrap().len(), 16);

    let out = rankob(&["build", "--mode", "toy"]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["params"]["k"], 2);
}

#[test]
fn dimension_hypothesis_violation_is_config_error() {
    let out = rankob(&["build", "--m", "3", "--k", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "config");
}

#[test]
fn eval_on_boundary_returns_boundary_values() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pts.csv");
    // Unit vectors of R^5; on the sphere F equals cubify(suspend(h, x)).
    fs::write(&input, "1,0,0,0,0\n0,0,0,0,-1\n0.6,0,0.8,0,0\n").unwrap();
    let out = rankob(&["eval", "--input", p(&input)]);
    assert_eq!(out.status.code(), Some(0));
    let recs = jsonl(&out);
    assert_eq!(recs[0]["record"], "header");
    let vals: Vec<Vec<f64>> = recs[1..]
        .iter()
        .map(|r| serde_json::from_value(r["value"].clone()).unwrap())
        .collect();
    // h(1,0,0,0) = (0,0,1), h(0.6,0,0.8,0) = (0.96,0,-0.28).
    let expect = [
        vec![0.0, 0.0, 0.5, 0.0],
        vec![0.0, 0.0, 0.0, -0.5],
        vec![0.5, 0.0, -0.28 / 1.92, 0.0],
    ];
    for (v, e) in vals.iter().zip(&expect) {
        for (a, b) in v.iter().zip(e) {
            assert!((a - b).abs() < 1e-12, "{v:?} vs {e:?}");
        }
    }
    assert!(recs[1..].iter().all(|r| r["truncated"] == false && r["depth_used"] == 0));
}

#[test]
fn eval_depth_column_controls_truncation() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pts.csv");
    // The center of ball 0 after three nested descents.
    let inst: Value = serde_json::from_slice(&rankob(&["build"]).stdout).unwrap();
    let c: Vec<f64> = serde_json::from_value(inst["layout"]["centers"][0].clone()).unwrap();
    let x: Vec<String> = c.iter().map(|v| (v * (1.0 + 0.15 + 0.0225)).to_string()).collect();
    let mut text = String::new();
    for d in 0..4 {
        text.push_str(&format!("{},{d}\n", x.join(",")));
    }
    fs::write(&input, text).unwrap();
    let recs = jsonl(&rankob(&["eval", "--input", p(&input), "--jacobian"]));
    assert_eq!(recs.len(), 5);
    let mut bounds = Vec::new();
    for r in &recs[1..] {
        assert_eq!(r["record"], "value");
        assert!(r.get("singular_values").is_some());
        bounds.push(r["error_bound"].as_f64().unwrap());
        let used = r["depth_used"].as_u64().unwrap();
        if r["truncated"] == true {
            assert!((r["error_bound"].as_f64().unwrap() - 2.0 * 0.5f64.powi(used as i32)).abs() < 1e-15);
        }
    }
    assert!(bounds.windows(2).all(|w| w[1] <= w[0]), "{bounds:?}");
}

#[test]
fn eval_empty_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "").unwrap();
    let out = rankob(&["eval", "--input", p(&empty)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "0.1,0.2,abc,0,0\n").unwrap();
    assert_eq!(rankob(&["eval", "--input", p(&bad)]).status.code(), Some(3));
    fs::write(&bad, "0.1,0.2\n").unwrap();
    assert_eq!(rankob(&["eval", "--input", p(&bad)]).status.code(), Some(3));

    let missing = dir.path().join("missing.csv");
    assert_eq!(rankob(&["eval", "--input", p(&missing)]).status.code(), Some(3));
}

#[test]
fn eval_padded_map() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pts.csv");
    fs::write(&input, "0.1,0.2,0,0,0,0.3,0.4\n").unwrap();
    let recs = jsonl(&rankob(&["eval", "--input", p(&input), "--ell", "7", "--r", "6"]));
    assert_eq!(recs[1]["value"].as_array().unwrap().len(), 6);
}

#[test]
fn certify_suite_selection_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("r.json");
    let out = rankob(&["certify", "--suite", "boundary-gluing", "--samples", "500", "--out", p(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["reports"][0]["suite"], "boundary-gluing");
    assert!(v["reports"][0].get("metadata").is_none());
    assert!(v["metadata"]["runtime_ms"]["boundary-gluing"].is_number());

    assert_eq!(rankob(&["certify", "--suite", "bogus"]).status.code(), Some(2));
    assert_eq!(rankob(&["certify", "--suite", "negative", "--samples", "200"]).status.code(), Some(1));
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"seed": 3, "sampels": 10}"#).unwrap();
    assert_eq!(rankob(&["build", "--config", p(&cfg)]).status.code(), Some(2));
    fs::write(&cfg, r#"{"seed": 3, "mode": "toy"}"#).unwrap();
    let out = rankob(&["build", "--config", p(&cfg)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["params"]["seed"], 3);
}

#[test]
fn export_slice() {
    assert_eq!(rankob(&["export-slice", "--resolution", "0"]).status.code(), Some(2));
    let out = rankob(&["export-slice", "--mode", "toy", "--resolution", "9", "--axes", "0,2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "u,v,x0,x1,x2,y0,y1,y2,depth_used,truncated,face_id");
    let rows: Vec<&str> = lines.collect();
    // Grid points inside the unit disk of the (x0, x2) plane.
    let inside = (0..9)
        .flat_map(|i| (0..9).map(move |j| (i, j)))
        .filter(|&(i, j)| {
            let (u, v) = (-1.0 + 0.25 * i as f64, -1.0 + 0.25 * j as f64);
            u * u + v * v <= 1.0
        })
        .count();
    assert_eq!(rows.len(), inside);
    assert!(rows.iter().all(|r| r.split(',').count() == 11));
}

#[test]
fn approx_experiment_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("a.json");
    let out = rankob(&["experiment", "approx", "--out", p(&out_path)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["levels"].as_array().unwrap().len(), 4);
    assert!(v["run_config"].is_object());
}

mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::fixture_dir;
use serde_json::Value;

fn qprob(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qprob"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn ok(args: &[&str], cwd: &Path) -> Value {
    let out = qprob(args, cwd);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    json(&out)
}

fn fixture(name: &str) -> String {
    fixture_dir("valid").join(name).to_string_lossy().into_owned()
}

#[test]
fn gen_validate_and_distances() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--kind", "qpm", "--dim", "2", "--atoms", "3", "--seed", "1", "-o", "a.json"], d);
    ok(&["gen", "--kind", "qpm", "--dim", "2", "--atoms", "3", "--seed", "2", "-o", "b.json"], d);
    assert_eq!(ok(&["validate", "a.json"], d)["valid"], true);

    let rho = ok(&["dist", "--metric", "rho", "a.json", "b.json"], d);
    let delta = ok(&["dist", "--metric", "delta", "a.json", "b.json"], d);
    assert_eq!(rho["exact"], true);
    let (r, dl) = (rho["value"].as_f64().unwrap(), delta["value"].as_f64().unwrap());
    assert!((r - 2.0 * dl).abs() <= 1e-9);
    assert_eq!(rho["certificate"]["signs"].as_array().unwrap().len(), 3);

    let tv = ok(&["dist", "--metric", "tv", "a.json"], d);
    assert!((tv["values"][0].as_f64().unwrap() - 1.0).abs() <= 1e-9);

    let capped = ok(&["dist", "--metric", "rho", "a.json", "b.json", "--exact-cap", "2"], d);
    assert_eq!(capped["exact"], false);
    assert!(capped["value"].as_f64().unwrap() <= capped["upper"].as_f64().unwrap());

    let first = std::fs::read_to_string(d.join("a.json")).unwrap();
    ok(&["gen", "--kind", "qpm", "--dim", "2", "--atoms", "3", "--seed", "1", "-o", "a2.json"], d);
    assert_eq!(first, std::fs::read_to_string(d.join("a2.json")).unwrap());
}

#[test]
fn z_against_x_examples() {
    let dir = tempfile::tempdir().unwrap();
    let z = fixture("qpm_z.json");
    let x_text = r#"{"schema_version": 1, "kind": "qpm", "dim": 2,
        "outcomes": {"kind": "finite", "labels": ["up", "down"]},
        "effects": [[[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]],
                    [[[0.5, 0], [-0.5, 0]], [[-0.5, 0], [0.5, 0]]]]}"#;
    let x = dir.path().join("x.json");
    std::fs::write(&x, x_text).unwrap();
    let x = x.to_string_lossy().into_owned();

    let rho = ok(&["dist", "--metric", "rho", &z, &x], dir.path());
    assert!((rho["value"].as_f64().unwrap() - 2f64.sqrt()).abs() <= 1e-12);

    let b = ok(&["bures", &z, &x, "--seed", "3"], dir.path());
    assert_eq!(b["bracket_holds"], true);
    assert_eq!(b["converged"], true);
    assert!((b["lower"].as_f64().unwrap() - 0.5f64.sqrt()).abs() <= 1e-12);
    assert!(b["upper"].as_f64().unwrap() <= 2f64.powf(0.25) + 1e-6);
}

#[test]
fn validation_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = qprob(&["validate", &fixture("qpm_unnormalized.json")], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let report = json(&out);
    assert_eq!(report["valid"], false);
    assert!((report["details"]["sum_residual"].as_f64().unwrap() - 0.1).abs() <= 1e-12);

    let out = qprob(&["validate", &fixture("dilation_not_isometry.json")], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["unknown_field.json", "wrong_version.json", "nan_entry.json"] {
        let path = fixture_dir("malformed").join(name);
        let out = qprob(&["validate", path.to_str().unwrap()], dir.path());
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(out.stdout.is_empty());
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
    let out = qprob(&["dist", "--metric", "rho", &fixture("qpm_z.json")], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = qprob(&["bures", &fixture("qpm_z.json"), &fixture("qpm_z.json"), "--restarts", "0"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = qprob(&["validate", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dilate_writes_a_triple() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--kind", "qpm", "--dim", "2", "--atoms", "3", "--seed", "4", "-o", "e.json"], d);
    let full = ok(&["dilate", "e.json"], d);
    assert_eq!(full["env_dim"], 6);
    assert!(full["residual"].as_f64().unwrap() <= 1e-9);
    assert!(d.join("e.dilation.json").exists());
    assert_eq!(ok(&["validate", "e.dilation.json"], d)["valid"], true);

    let minimal = ok(&["dilate", "e.json", "--minimal", "-o", "min.json"], d);
    assert!(minimal["env_dim"].as_u64().unwrap() <= 6);
    assert_eq!(ok(&["validate", "min.json"], d)["kind"], "dilation");
}

#[test]
fn channel_distance_paths_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["gen", "--kind", "channel", "--dim", "2", "--atoms", "3", "--inputs", "4", "--seed", "5", "-o", "c1.json"], d);
    ok(&["gen", "--kind", "channel", "--dim", "2", "--atoms", "3", "--inputs", "4", "--seed", "6", "-o", "c2.json"], d);
    let r = ok(&["channel-dist", "c1.json", "c2.json"], d);
    assert_eq!(r["paths_agree"], true);
    assert!(r["argmax"].as_str().unwrap().starts_with('x'));
}

#[test]
fn converge_with_and_without_measure() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&[
        "gen", "--kind", "sequence", "--dim", "2", "--atoms", "2", "--inputs", "3", "--len", "40", "--drift", "shrink",
        "--seed", "8", "-o", "s.json",
    ], d);
    let r = ok(&["converge", "s.json", "--tol", "0.1"], d);
    let indices: Vec<u64> = r["indices"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(*indices.last().unwrap(), 39);
    assert!(indices.windows(2).all(|w| w[1] == w[0] + 1));
    assert_eq!(ok(&["validate", "s.limit.json"], d)["kind"], "channel");

    std::fs::write(
        d.join("mu.json"),
        r#"{"schema_version": 1, "kind": "measure", "inputs": ["x0", "x1", "x2"], "measure": [0.5, 0, 0.5]}"#,
    )
    .unwrap();
    let r = ok(&["converge", "s.json", "--tol", "0.1", "--mu", "mu.json", "-o", "lim.json"], d);
    let gaps = r["bw_gaps"].as_array().unwrap();
    assert_eq!(gaps.len(), r["indices"].as_array().unwrap().len());
    assert!(gaps.iter().all(|g| g.as_f64().unwrap() < 0.1));
    assert_eq!(ok(&["validate", "lim.json"], d)["kind"], "channel+measure");
}

#[test]
fn equiv_reports_witness() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let e = fixture("channel_measure.json");
    let f = r#"{"schema_version": 1, "kind": "channel", "dim": 1,
        "outcomes": {"kind": "finite", "labels": ["a", "b"]}, "inputs": ["x0", "x1"],
        "channel": [[[[[0.25, 0]]], [[[0.75, 0]]]], [[[[0.5, 0]]], [[[0.5, 0]]]]]}"#;
    std::fs::write(d.join("f.json"), f).unwrap();
    let r = ok(&["equiv", &e, "f.json", "--mu", &e], d);
    assert_eq!(r["equivalent"], true);
    assert_eq!(r["ucp_equivalent"], true);
    assert!(r["witness"].is_null());

    std::fs::write(
        d.join("uniform.json"),
        r#"{"schema_version": 1, "kind": "measure", "inputs": ["x0", "x1"], "measure": [0.5, 0.5]}"#,
    )
    .unwrap();
    let r = ok(&["equiv", &e, "f.json", "--mu", "uniform.json"], d);
    assert_eq!(r["equivalent"], false);
    assert_eq!(r["ucp_equivalent"], false);
    assert_eq!(r["witness"]["atom"], "a");
    assert_eq!(r["witness"]["input"], "x1");
}

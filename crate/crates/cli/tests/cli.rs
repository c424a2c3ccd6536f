use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_conicond"))
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], files: &[&Path]) -> Output {
    let mut c = bin();
    c.args(args);
    for f in files {
        c.arg(f);
    }
    c.output().unwrap()
}

fn json_of(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn value(report: &Value, name: &str) -> f64 {
    report["results"][name]["value"].as_f64().unwrap()
}

const WEDGE: &str = r#"{"version":1,"n":2,"cone":{"kind":"polyhedral2d","phi":0.5235987755982988},
  "subspace":{"basis":[[0,1]]},"norms":{"primal":"l2","tri":"l2"}}"#;

#[test]
fn measure_on_the_rotated_cone() {
    let d = TempDir::new().unwrap();
    let p = write(&d, "wedge.json", WEDGE);
    let r = json_of(&run(&["measure", "--json"], &[&p]));
    assert!((value(&r, "nu") - 0.5).abs() < 1e-9);
    assert!((value(&r, "sigma") - 1.0 / 3f64.sqrt()).abs() < 1e-9);
    assert!((value(&r, "theta") - std::f64::consts::FRAC_PI_6).abs() < 1e-6);
    assert_ne!(r["results"]["nu"]["path"], "Sampled");
    assert_eq!(r["command"], "measure");
    assert_eq!(r["inputs_digest"].as_str().unwrap().len(), 64);
}

#[test]
fn dist_on_the_asymmetry_pair() {
    let d = TempDir::new().unwrap();
    let a = write(
        &d,
        "a.json",
        r#"{"version":1,"n":2,"cone":{"kind":"orthant"},"subspace":{"basis":[[1,0]]},"norms":{"primal":"l1","tri":"l1"}}"#,
    );
    let b = write(
        &d,
        "b.json",
        r#"{"version":1,"n":2,"cone":{"kind":"orthant"},"subspace":{"basis":[[1,1]]},"norms":{"primal":"l1","tri":"l1"}}"#,
    );
    let r = json_of(&run(&["dist", "--json"], &[&a, &b]));
    assert!((value(&r, "dist_12") - 1.0).abs() < 1e-9);
    assert!((value(&r, "dist_21") - 0.5).abs() < 1e-9);
    assert!((value(&r, "odist_12") - 0.5).abs() < 1e-9);
    assert!((value(&r, "odist_21") - 1.0).abs() < 1e-9);
}

#[test]
fn partition_of_a_mixed_line() {
    let d = TempDir::new().unwrap();
    let p = write(
        &d,
        "l.json",
        r#"{"version":1,"n":3,"cone":{"kind":"orthant"},"subspace":{"basis":[[1,1,0]]},
            "norms":{"primal":"l1","tri":"linf"},"map":{"matrix":[[1],[1],[0]],"domain_norm":"l2"}}"#,
    );
    let r = json_of(&run(&["partition", "--json"], &[&p]));
    assert_eq!(
        r["results"]["partition"]["value"]["b"],
        serde_json::json!([0, 1])
    );
    assert_eq!(
        r["results"]["partition"]["value"]["n"],
        serde_json::json!([2])
    );
    assert!((value(&r, "nu_b") - 0.5).abs() < 1e-9);
    assert!((value(&r, "nu_n") - 1.0).abs() < 1e-9);
    assert!(
        r["results"]["block_decomposition"]["residual"]
            .as_f64()
            .unwrap()
            <= 1e-9
    );
}

#[test]
fn renegar_on_an_isometry_collapses() {
    let d = TempDir::new().unwrap();
    let s = 0.5f64.sqrt();
    let p = write(
        &d,
        "iso.json",
        &format!(
            r#"{{"version":1,"n":2,"cone":{{"kind":"orthant"}},"norms":{{"primal":"l2","tri":"l2"}},
                "map":{{"matrix":[[{s}],[{s}]],"domain_norm":"l2"}}}}"#
        ),
    );
    let r = json_of(&run(&["renegar", "--json", "--budget", "50"], &[&p]));
    assert!((value(&r, "kappa") - 1.0).abs() < 1e-9);
    let br = r["results"]["rdist_bracket"]["value"].as_array().unwrap();
    assert!((br[0].as_f64().unwrap() - s).abs() < 1e-9);
    assert!((br[1].as_f64().unwrap() - s).abs() < 1e-9);
    assert!((value(&r, "rdist_estimate") - s).abs() <= 0.05 * s);
}

#[test]
fn precondition_of_a_skew_line() {
    let d = TempDir::new().unwrap();
    let p = write(
        &d,
        "l.json",
        r#"{"version":1,"n":2,"cone":{"kind":"orthant"},"subspace":{"basis":[[2,1]]},"norms":{"primal":"l2","tri":"l2"}}"#,
    );
    let r = json_of(&run(&["precondition", "--json"], &[&p]));
    let pre = &r["results"]["preconditioner"];
    let x0: Vec<f64> = serde_json::from_value(pre["value"].clone()).unwrap();
    assert!((x0[0] - 2.0).abs() < 1e-9 && (x0[1] - 1.0).abs() < 1e-9);
    let pm: Vec<Vec<f64>> = serde_json::from_value(pre["certificate"]["p"].clone()).unwrap();
    assert!((pm[0][0] - 0.5).abs() < 1e-9 && (pm[1][1] - 1.0).abs() < 1e-9);
    assert_eq!(
        r["results"]["nu_preconditioned"]["certificate"]["holds"],
        true
    );
}

#[test]
fn certify_passes_on_the_rotated_cone() {
    let d = TempDir::new().unwrap();
    let p = write(&d, "wedge.json", WEDGE);
    let r = json_of(&run(&["certify", "--json"], &[&p]));
    assert_eq!(r["results"]["all_pass"]["value"], true, "{r:#}");
}

#[test]
fn envelope_is_the_same_for_every_command() {
    let d = TempDir::new().unwrap();
    let p = write(&d, "wedge.json", WEDGE);
    for cmd in ["measure", "oracle", "certify"] {
        let r = json_of(&run(&[cmd, "--json", "--budget", "20"], &[&p]));
        let mut keys: Vec<&str> = r.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            ["command", "inputs_digest", "notes", "results", "seed"]
        );
        for e in r["results"].as_object().unwrap().values() {
            assert!(
                e.get("value").is_some() && e.get("path").is_some() && e.get("residual").is_some()
            );
        }
    }
}

#[test]
fn text_output_uses_key_value_blocks() {
    let d = TempDir::new().unwrap();
    let p = write(&d, "wedge.json", WEDGE);
    let out = run(&["measure"], &[&p]);
    assert!(out.status.success());
    let t = String::from_utf8(out.stdout).unwrap();
    assert!(t.starts_with("command: measure\n"));
    assert!(t.contains("\n[nu]\nvalue: 0.49999"));
    assert!(t.contains("\n[sigma]\n"));
}

#[test]
fn gen_is_deterministic_and_round_trips() {
    let d = TempDir::new().unwrap();
    let a = d.path().join("a.json");
    let b = d.path().join("b.json");
    for p in [&a, &b] {
        let out = bin()
            .args([
                "gen", "--seed", "7", "--n", "4", "--m", "2", "--cone", "orthant", "--out",
            ])
            .arg(p)
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let out = run(&["gen", "--seed", "7", "--n", "4", "--m", "2"], &[]);
    assert_eq!(out.stdout, ta);
    let other = run(&["gen", "--seed", "8", "--n", "4", "--m", "2"], &[]);
    assert_ne!(other.stdout, ta);
    let r = json_of(&run(&["measure", "--json"], &[&a]));
    assert!(value(&r, "nu") >= 0.0);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let d = TempDir::new().unwrap();
    let p = d.path().join("g.json");
    assert!(bin()
        .args(["gen", "--seed", "3", "--n", "4", "--m", "2", "--map", "--out"])
        .arg(&p)
        .status()
        .unwrap()
        .success());
    let one = run(
        &["oracle", "--json", "--budget", "40", "--threads", "1"],
        &[&p],
    );
    let four = run(
        &["oracle", "--json", "--budget", "40", "--threads", "4"],
        &[&p],
    );
    assert_eq!(json_of(&one), json_of(&four));
}

#[test]
fn validation_errors_exit_with_two() {
    let d = TempDir::new().unwrap();
    let bad = write(
        &d,
        "bad.json",
        r#"{"version":1,"n":2,"cone":{"kind":"orthant"},"subspace":{"basis":[[1,1]]},"norms":{"primal":"l2","tri":"l2"},"colour":1}"#,
    );
    let out = run(&["measure"], &[&bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let short = write(
        &d,
        "short.json",
        r#"{"version":1,"n":3,"cone":{"kind":"orthant"},"subspace":{"basis":[[1,1]]},"norms":{"primal":"l2","tri":"l2"}}"#,
    );
    let out = run(&["measure"], &[&short]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("subspace.basis"));

    let nomap = write(&d, "wedge.json", WEDGE);
    let out = run(&["renegar"], &[&nomap]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("map"));

    let out = run(&["measure"], &[&d.path().join("missing.json")]);
    assert_eq!(out.status.code(), Some(2));
}

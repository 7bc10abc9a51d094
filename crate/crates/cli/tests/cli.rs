use std::path::PathBuf;
use std::process::{Command, Output};

use delos::criteria::corpus;
use delos::system::parse_system;
use serde_json::Value;

fn example(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name);
    p.to_string_lossy().into_owned()
}

fn delos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_delos")).args(args).output().expect("run delos")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let o = delos(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    dir.join(name)
}

#[test]
fn cc_of_the_plane_killing_system() {
    let o = delos(&["cc", &example("killing-n2.sys")]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("cc1: Omega11[2,2] - 2*Omega12[1,2] + Omega22[1,1]"), "{}", stdout(&o));
    let v = json(&["cc", &example("killing-n2.sys")]);
    assert_eq!(v["schema_version"], "1.0");
    assert_eq!(v["results"]["cc"]["rows"], 1);
    assert!(v["input_digest"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn partest_exit_codes() {
    let e = example("einstein-n4.sys");
    assert_eq!(delos(&["partest", &e, "--stages", "ext1"]).status.code(), Some(0));
    assert_eq!(delos(&["partest", &e, "--expect", "parametrizable"]).status.code(), Some(2));
    assert_eq!(delos(&["partest", &e, "--expect", "not-parametrizable"]).status.code(), Some(0));
    assert_eq!(delos(&["partest", &example("div.sys"), "--expect", "parametrizable"]).status.code(), Some(0));
    let v = json(&["partest", &e]);
    assert_eq!(v["results"]["parametrizable"], false);
    assert_eq!(v["results"]["d1_prime"]["rows"], 20);
    assert!(!v["results"]["witnesses"].as_array().unwrap().is_empty());
}

#[test]
fn second_stage_on_div() {
    let v = json(&["partest", &example("div.sys"), "--stages", "ext2"]);
    assert_eq!(v["results"]["ext1"], "zero");
    assert_eq!(v["results"]["ext2"], "zero");
    assert_eq!(v["decisions"]["stages"], "ext1,ext2");
}

#[test]
fn reports_are_reproducible() {
    let run = || {
        let mut v = json(&["partest", &example("pendulum-equal.sys")]);
        v.as_object_mut().unwrap().remove("timing_ms");
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn report_file_is_written() {
    let path = tmp("complete-contact.json");
    let o = delos(&["complete", &example("contact-n3.sys"), "--report", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("-xi1[1] + 2*x3*xi2[1] + xi2[2] + xi3[3]"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["workflow"], "complete");
    assert_eq!(v["results"]["added"].as_array().unwrap().len(), 1);
    assert!(v["timing_ms"].is_u64());
}

#[test]
fn parse_errors_carry_positions() {
    let path = tmp("bad.sys");
    std::fs::write(&path, "coords: x1 x2\nunknowns: u\nequations:\n  u[1] + v[2]\n").unwrap();
    let o = delos(&["cc", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("bad.sys:4:10:") && err.contains("`v`"), "{err}");
    assert_eq!(delos(&["cc", "/nonexistent.sys"]).status.code(), Some(1));
}

#[test]
fn emitted_systems_match_the_examples() {
    let path = tmp("killing-n3.sys");
    let o = delos(&["geom", "killing", "--metric", "euclidean", "--n", "3", "--emit-sys", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("dims [3, 6, 6, 3]"));
    let sf = parse_system(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(sf.system.equations == corpus("killing-n3.sys").system.equations);
}

#[test]
fn geometry_commands() {
    let v = json(&["geom", "contact", "--omega", "1,-x3,0"]);
    assert_eq!(v["results"]["structure_constant"], "1");
    assert_eq!(v["results"]["projective"], true);
    let v = json(&["geom", "contact", "--omega", "1,0,0"]);
    assert_eq!(v["results"]["structure_constant"], "0");
    assert_eq!(v["results"]["projective"], false);
    let v = json(&["geom", "weyl-split", "--n", "4", "--metric", "minkowski", "--input", &example("curvature-n4.json")]);
    assert_eq!(v["results"]["sigma_is_zero"], false);
    let v = json(&["geom", "hj"]);
    assert_eq!(v["results"]["dimension"], 9);
}

#[test]
fn involution_and_dims() {
    let v = json(&["involution", &example("linearized-cubic.sys")]);
    assert_eq!(v["results"]["involutive"], true);
    let o = delos(&["involution", &example("linearized-quadratic.sys")]);
    assert!(stdout(&o).contains("y11 - 1"), "{}", stdout(&o));
    let v = json(&["dims", &example("conformal-n3.sys")]);
    assert_eq!(v["results"]["cc_order_estimate"], 3);
}

#[test]
fn adjoint_of_a_square_operator() {
    let v = json(&["adjoint", &example("killing-n3.sys")]);
    assert!(v["results"].get("self_adjoint").is_none());
    let o = delos(&["adjoint", &example("airy.sys")]);
    assert!(o.status.success());
}

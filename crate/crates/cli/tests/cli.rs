use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

impl Run {
    fn json(&self) -> Value {
        serde_json::from_str(&self.stdout).unwrap_or_else(|e| panic!("{e}: {}", self.stdout))
    }
}

fn ratex(args: &[&str]) -> Run {
    ratex_env(args, &[])
}

fn ratex_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ratex"));
    cmd.args(args).env_remove("RATEX_TOL_RANK");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn write(dir: &TempDir, name: &str, body: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const EX31: &str = r#"{"n":1,"m":1,"lambda":1,"kappa":1,
  "B":{"-1":[[0.3333333333333333]],"0":[[1]],"1":[[0.5]]},"A":{"0":[[1]],"1":[[0.5]]}}"#;
const ONE_ONE: &str = r#"{"n":1,"m":1,"lambda":1,"kappa":1,"B":{"0":[[1]]},"A":{"0":[[1]]}}"#;

#[test]
fn factorize_example() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "m.json", EX31);
    let r = ratex(&["factorize", s(&f), "--format", "json-report"]);
    assert_eq!(r.code, 0, "{}", r.stderr);
    let js = r.json();
    let b0 = (3.0 + 3f64.sqrt()) / 6.0;
    assert!((js["b_plus"]["0"][0][0].as_f64().unwrap() - b0).abs() < 1e-8);
    assert!((js["b_minus"]["-1"][0][0].as_f64().unwrap() - 1.0 / (3.0 * b0)).abs() < 1e-8);
    assert_eq!(js["command"], "factorize");
}

#[test]
fn factorize_varma_and_unit_circle() {
    let dir = TempDir::new().unwrap();
    let varma = write(&dir, "v.json", r#"{"n":1,"m":1,"lambda":0,"kappa":1,"B":{"0":[[1]],"1":[[-0.5]]},"A":{"0":[[1]]}}"#);
    let r = ratex(&["factorize", s(&varma)]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("B_minus = I"));
    let bad = write(&dir, "b.json", r#"{"n":1,"m":1,"lambda":0,"kappa":1,"B":{"0":[[1]],"1":[[-1]]},"A":{"0":[[1]]}}"#);
    let r = ratex(&["factorize", s(&bad)]);
    assert_eq!(r.code, 2);
    assert!(r.stdout.contains("zeros on unit circle"), "{}", r.stdout);
}

#[test]
fn input_errors_exit_1() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "bad.json", r#"{"n":1,"m":1,"lambda":0,"kappa":0,"B":{"0":[[1, 2]]},"A":{"0":[[1]]}}"#);
    let r = ratex(&["factorize", s(&f)]);
    assert_eq!(r.code, 1);
    assert!(r.stderr.contains("1x1"), "{}", r.stderr);
    let r = ratex(&["solve", "/nonexistent/model.json", "--format", "json-report"]);
    assert_eq!(r.code, 1);
    assert_eq!(r.json()["error"]["kind"], "InputError");
}

#[test]
fn solve_reports_transfer_and_cf() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "m.json", ONE_ONE);
    let r = ratex(&["solve", s(&f), "--horizon", "3"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.contains("C[0] = [1]") && r.stdout.contains("C[3] = [0]"), "{}", r.stdout);
    assert!(r.stdout.contains("CF: canonical"));
    let f = write(&dir, "z.json", r#"{"n":1,"m":1,"lambda":0,"kappa":1,"B":{"0":[[1]]},"A":{"1":[[1]]}}"#);
    let r = ratex(&["solve", s(&f), "--format", "json-report"]);
    assert_eq!(r.code, 2);
    assert_eq!(r.json()["cf"]["kind"], "RankDeficientC0");
}

#[test]
fn equivalence_examples() {
    let dir = TempDir::new().unwrap();
    let base =
        write(&dir, "a.json", r#"{"n":1,"m":1,"lambda":1,"kappa":1,"B":{"0":[[1]],"1":[[0.5]]},"A":{"0":[[1]],"1":[[0.5]]}}"#);
    let one = write(&dir, "one.json", ONE_ONE);
    let ex = write(&dir, "ex.json", EX31);
    let diff = write(&dir, "d.json", r#"{"n":1,"m":1,"lambda":1,"kappa":1,"B":{"0":[[1]]},"A":{"0":[[1]],"1":[[0.5]]}}"#);
    assert_eq!(ratex(&["equiv", s(&one), s(&base)]).code, 0);
    let r = ratex(&["equiv", s(&one), s(&ex), "--format", "json-report"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json()["verdict"], "equivalent");
    let r = ratex(&["equiv", s(&one), s(&diff), "--oracle", "kernel"]);
    assert_eq!(r.code, 3);
    assert!(r.stdout.contains("not equivalent"));
    assert_eq!(ratex(&["equiv", s(&one), s(&diff), "--oracle", "spectral"]).code, 3);
}

#[test]
fn ident_pinned_scalar_model() {
    let dir = TempDir::new().unwrap();
    let pins = write(
        &dir,
        "r.json",
        r#"{"pins":[{"block":"B","lag":-1,"row":1,"col":1,"value":-0.4},{"block":"A","lag":0,"row":1,"col":1,"value":0.7}]}"#,
    );
    let good =
        write(&dir, "g.json", r#"{"n":1,"m":1,"lambda":1,"kappa":1,"B":{"-1":[[-0.4]],"0":[[1]]},"A":{"0":[[0.7]],"1":[[1]]}}"#);
    let bad = write(&dir, "b.json", r#"{"n":1,"m":1,"lambda":1,"kappa":1,"B":{"-1":[[-0.4]],"0":[[1]]},"A":{"0":[[0.7]]}}"#);
    let r = ratex(&["ident", s(&good), s(&pins), "--format", "json-report"]);
    assert_eq!(r.code, 0);
    let js = r.json();
    assert_eq!(js["verdict"], "identified");
    assert_eq!(js["required_rank"], 6);
    assert_eq!(js["singular_values"].as_array().unwrap().len(), 6);
    let r = ratex(&["ident", s(&bad), s(&pins)]);
    assert_eq!(r.code, 3);
    assert!(r.stdout.contains("not identified"));
}

#[test]
fn ident_ds_cross_check_and_tolerance_env() {
    let dir = TempDir::new().unwrap();
    let m = write(
        &dir,
        "v.json",
        r#"{"n":2,"m":1,"lambda":0,"kappa":1,"B":{"0":[[1,0],[0.3,1]],"1":[[-0.5,0.1],[0,0.2]]},"A":{"0":[[1],[0.5]],"1":[[0.2],[-0.3]]}}"#,
    );
    let r = write(
        &dir,
        "r.json",
        r#"{"R":[[1,0,0,0,0,0,0,0,0,0,0,0],[0,1,0,0,0,0,0,0,0,0,0,0],[0,0,1,0,0,0,0,0,0,0,0,0],[0,0,0,1,0,0,0,0,0,0,0,0]],"u":[1,0.3,0,1]}"#,
    );
    let out = ratex(&["ident", s(&m), s(&r), "--ds", "--format", "json-report"]);
    let js = out.json();
    assert_eq!(js["ds"]["agrees"], true, "{}", out.stdout);
    assert_eq!(js["tol_rank"], 1e-10);
    let out = ratex_env(&["ident", s(&m), s(&r), "--format", "json-report"], &[("RATEX_TOL_RANK", "1e-6")]);
    assert_eq!(out.json()["tol_rank"], 1e-6);
    let out = ratex_env(&["ident", s(&m), s(&r), "--tol-rank", "1e-7", "--format", "json-report"], &[("RATEX_TOL_RANK", "1e-6")]);
    assert_eq!(out.json()["tol_rank"], 1e-7);
}

const HS3: &str = "params theta1 theta2 theta3
domain theta1 0.5 1
domain theta2 -3 -0.5
domain theta3 -3 -0.2
dims 1 1 1 1
B -1 1 1 = theta1
B 0 1 1 = -((theta3/theta2)+1+theta1)
B 1 1 1 = 1
A 0 1 1 = 1/theta2
";

const HS2_JSON: &str = r#"{"n":1,"m":1,"lambda":1,"kappa":1,"parametrized":{
  "params":["theta2","theta3"],"domain":[[-3,-0.5],[-3,-0.2]],
  "B":{"-1":[[1]],"0":[["-((theta3/theta2)+2)"]],"1":[[1]]},"A":{"0":[["1/theta2"]]}}}"#;

#[test]
fn generic_hansen_sargent() {
    let dir = TempDir::new().unwrap();
    let m3 = write(&dir, "hs3.txt", HS3);
    let m2 = write(&dir, "hs2.json", HS2_JSON);
    let r3 = write(
        &dir,
        "r3.json",
        r#"{"pins":[{"block":"B","lag":1,"row":1,"col":1,"value":1},{"block":"A","lag":1,"row":1,"col":1,"value":0}]}"#,
    );
    let r2 = write(
        &dir,
        "r2.json",
        r#"{"pins":[{"block":"B","lag":1,"row":1,"col":1,"value":1},{"block":"A","lag":1,"row":1,"col":1,"value":0},{"block":"B","lag":-1,"row":1,"col":1,"value":1}]}"#,
    );
    let out = ratex(&["generic", s(&m3), s(&r3), "--format", "json-report"]);
    assert_eq!(out.code, 3, "{}", out.stdout);
    let js = out.json();
    assert_eq!(js["verdict"], "evidence_not_identified");
    assert!(js["samples_valid"].as_u64().unwrap() >= 16);
    let out = ratex(&["generic", s(&m2), s(&r2), "--samples", "32", "--seed", "5"]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    assert!(out.stdout.contains("generically_identified") && out.stdout.contains("witness"));
    let again = ratex(&["generic", s(&m2), s(&r2), "--samples", "32", "--seed", "5"]);
    assert_eq!(out.stdout, again.stdout);
    let few = ratex(&["generic", s(&m3), s(&r3), "--samples", "3"]);
    assert_eq!(few.code, 4);
}

#[test]
fn local_caveat_and_affine_agreement() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "m.json", r#"{"n":1,"m":1,"lambda":0,"kappa":0,"B":{"0":[[2]]},"A":{"0":[[1]]}}"#);
    let r = write(&dir, "r.json", r#"{"nonlinear":["(A[0][1][1] - 1)^2"]}"#);
    let out = ratex(&["local", s(&m), s(&r), "--format", "json-report"]);
    assert_eq!(out.code, 4, "{}", out.stdout);
    let js = out.json();
    assert!(js["notes"][0].as_str().unwrap().contains("regularity"));
    assert_ne!(js["verdict"], "not_identified_under_regularity");

    let m =
        write(&dir, "g.json", r#"{"n":1,"m":1,"lambda":1,"kappa":1,"B":{"-1":[[-0.4]],"0":[[1]]},"A":{"0":[[0.7]],"1":[[1]]}}"#);
    let pins = write(
        &dir,
        "p.json",
        r#"{"pins":[{"block":"B","lag":-1,"row":1,"col":1,"value":-0.4},{"block":"A","lag":0,"row":1,"col":1,"value":0.7}]}"#,
    );
    let nl = write(&dir, "n.json", r#"{"nonlinear":["B[-1][1][1] + 0.4", "A[0][1][1] - 0.7"]}"#);
    assert_eq!(ratex(&["ident", s(&m), s(&pins)]).code, 0);
    assert_eq!(ratex(&["local", s(&m), s(&pins)]).code, 0);
    assert_eq!(ratex(&["local", s(&m), s(&nl)]).code, 0);
}

#[test]
fn spectrum_and_simulation_csv() {
    let dir = TempDir::new().unwrap();
    let wn = write(&dir, "wn.json", r#"{"n":1,"m":1,"lambda":0,"kappa":0,"B":{"0":[[1]]},"A":{"0":[[2]]}}"#);
    let r = ratex(&["spectrum", s(&wn), "--grid", "8"]);
    assert_eq!(r.code, 0);
    let lines: Vec<&str> = r.stdout.lines().collect();
    assert_eq!(lines[0], "omega,re_f1_1,im_f1_1");
    assert_eq!(lines.len(), 9);
    assert!(lines[1..].iter().all(|l| l.split(',').nth(1) == Some("4")));

    // Equivalent pair: identical spectra up to rounding.
    let a = write(&dir, "a.json", r#"{"n":1,"m":1,"lambda":1,"kappa":1,"B":{"0":[[1]],"1":[[-0.5]]},"A":{"0":[[1]]}}"#);
    let b = write(
        &dir,
        "b.json",
        r#"{"n":1,"m":1,"lambda":1,"kappa":1,"B":{"-1":[[0.4]],"0":[[0.8]],"1":[[-0.5]]},"A":{"0":[[1]]}}"#,
    );
    let (fa, fb) = (dir.path().join("fa.csv"), dir.path().join("fb.csv"));
    assert_eq!(ratex(&["spectrum", s(&a), "--out", s(&fa)]).code, 0);
    assert_eq!(ratex(&["spectrum", s(&b), "--out", s(&fb)]).code, 0);
    let parse = |p: &Path| -> Vec<f64> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .skip(1)
            .flat_map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect()
    };
    let (va, vb) = (parse(&fa), parse(&fb));
    assert_eq!(va.len(), 64 * 3);
    assert!(va.iter().zip(&vb).all(|(x, y)| (x - y).abs() < 1e-10));

    let (s1, s2) = (dir.path().join("s1.csv"), dir.path().join("s2.csv"));
    let r = ratex(&["simulate", s(&a), "--T", "50", "--seed", "3", "--out", s(&s1), "--format", "json-report"]);
    assert_eq!(r.code, 0);
    assert_eq!(r.json()["rows"], 50);
    ratex(&["simulate", s(&a), "--T", "50", "--seed", "3", "--out", s(&s2)]);
    let (c1, c2) = (std::fs::read_to_string(&s1).unwrap(), std::fs::read_to_string(&s2).unwrap());
    assert_eq!(c1, c2);
    assert!(c1.starts_with("t,y_1\n0,"));
    assert_eq!(c1.lines().count(), 51);
}

//! End-to-end tests for the `ramrec` binary.

use std::io::Write;
use std::process::{Command, Output, Stdio};

const BIN: &str = env!("CARGO_BIN_EXE_ramrec");

fn programs_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../programs")
        .canonicalize()
        .unwrap()
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(programs_dir())
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn run_height_grow_prints_ten() {
    let out = run(&["run", "height_grow.s1"]);
    assert!(out.status.success(), "{:?}", out);
    assert!(stdout(&out).contains("10"), "{}", stdout(&out));
}

#[test]
fn run_json_is_valid_json() {
    let out = run(&["run", "--json", "sum_lst.s1"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["result"]["pretty"], "6");
    assert_eq!(v["result"]["size"], 7);
}

#[test]
fn check_reports_def_types() {
    let out = run(&["check", "plus_prime.s1"]);
    assert!(out.status.success());
    assert!(
        stdout(&out)
            .contains("plus' : (safe mu((unit+#))*mu((unit+#))) -> safe mu((unit+#))"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn missing_file_is_user_error() {
    let out = run(&["run", "no_such_file.s1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn type_error_is_user_error() {
    let dir = std::env::temp_dir().join("ramrec-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("bad.s1");
    std::fs::write(
        &path,
        "%calculus rs1\n\
         datatype nat = Zero | Succ of nat\n\
         def bad = fn (y : safe nat) => toNorm y\n",
    )
    .unwrap();
    let out = Command::new(BIN)
        .args(["check", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("SideConditionToNorm"), "{}", err);
}

#[test]
fn serialize_deserialize_roundtrip() {
    let ser = run(&["serialize", "grow.s1"]);
    assert!(ser.status.success());
    let mut child = Command::new(BIN)
        .args(["deserialize", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(&ser.stdout)
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success(), "{:?}", out);
    // grow 3: a fully shared depth-3 tree of 4 constructors.
    let text = stdout(&out);
    assert!(text.contains("size=4 cs=4"), "{}", text);
    assert!(text.contains("mu((unit+(#*#)))"), "{}", text);
}

#[test]
fn compress_reports_sizes() {
    let out = run(&["compress", "--json", "cs_demo.s1"]);
    assert!(out.status.success());
    // cs_demo's main is already the numeral 3 (four constructors).
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["after"]["size"], 4);
    assert_eq!(v["result"]["pretty"], "3");
}

#[test]
fn bounds_rejects_plain_calculus() {
    let out = run(&["bounds", "grow.s1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ni_check_passes_on_corpus_def() {
    let out = run(&["ni-check", "plus_prime.s1", "--trials", "100"]);
    assert!(out.status.success(), "{:?}", out);
}

#[test]
fn corpus_passes() {
    let out = run(&["corpus", "."]);
    assert!(out.status.success(), "{:?}", out);
    assert!(stdout(&out).contains("0 failed"), "{}", stdout(&out));
}

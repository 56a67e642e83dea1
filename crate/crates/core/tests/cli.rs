use std::path::PathBuf;
use std::process::{Command, Output};

const PATH4: &str = "\
# path a - b - c - d, c marked
rel E 2
rel P 1
node a
node b
node c
node d
fact E a b
fact E b a
fact E b c
fact E c b
fact E c d
fact E d c
fact P c
";

fn write_tmp(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fo-enum-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn fo_enum(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fo-enum")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn enum_lists_edges_in_order() {
    let s = write_tmp("path.txt", PATH4);
    let o = fo_enum(&["enum", "--structure", s.to_str().unwrap(), "--query", "E(x,y)", "--oracle-check"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "a\tb\nb\ta\nb\tc\nc\tb\nc\td\nd\tc\noracle: match\n");
}

#[test]
fn enum_with_head_limit_and_stats() {
    let s = write_tmp("path-head.txt", PATH4);
    let o = fo_enum(&[
        "enum",
        "--structure",
        s.to_str().unwrap(),
        "--query",
        "exists z (E(x,z) & P(z))",
        "--head",
        "x",
        "--radius",
        "2",
        "--limit",
        "1",
        "--stats",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("b\n{\n"), "{out}");
    assert!(out.contains("\"emitted\": 1,"));
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning: radius override 2"));
}

#[test]
fn check_and_index() {
    let s = write_tmp("path-check.txt", PATH4);
    let p = s.to_str().unwrap();
    let o = fo_enum(&["check", "--structure", p, "--query", "P(x) & E(x,y) & P(y)"]);
    assert_eq!(stdout(&o), "false\n");
    let o = fo_enum(&["check", "--structure", p, "--query", "exists x P(x)"]);
    assert_eq!(stdout(&o), "true\n");
    let o = fo_enum(&["index", "--structure", p, "--query", "E(x,y)", "--dump-types"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("elements 4 facts 7 max_degree 2\n"), "{out}");
    assert!(out.contains("plan k=2 r=2"));
    assert!(out.contains("preprocess_steps "));
}

#[test]
fn exit_codes() {
    let s = write_tmp("path-codes.txt", PATH4);
    let p = s.to_str().unwrap();
    let o = fo_enum(&["enum", "--structure", p, "--query", "E(x,y)", "--degree", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("degree"));
    let o = fo_enum(&["enum", "--structure", p, "--query", "E(x,y)", "--radius", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = fo_enum(&["enum", "--structure", p, "--query", "Q(x)"]);
    assert_eq!(o.status.code(), Some(1));
    let o = fo_enum(&["enum", "--structure", "/nonexistent/structure", "--query", "E(x,y)"]);
    assert_eq!(o.status.code(), Some(1));
    let o = fo_enum(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bench_prints_one_row_per_size() {
    let o = fo_enum(&["bench", "--query", "E(x,y)", "--radius", "1", "--sizes", "20,40", "--family", "cycle"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("20\t") && rows[2].starts_with("40\t"));
    assert_eq!(rows[2].split('\t').nth(4), Some("80"));
}

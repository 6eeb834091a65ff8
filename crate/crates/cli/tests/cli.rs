use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;
use twp_core::model::Model;
use twp_core::parse::parse_model;

const RING: &str = "\
automaton A
clock x
action a
loc l0 init prio [1] inv x <= 2
loc l1 prio [2]
loc l2 prio [0] inv x <= 2
edge l0 -> l1 on a when true reset {}
edge l1 -> l2 on a when true reset {x}
edge l2 -> l0 on a when true reset {x}
";

const EVEN: &str = "\
automaton E
clock x
action a
loc l0 init prio [0] inv x <= 1
edge l0 -> l0 on a when x >= 1 reset {x}
";

const GAME: &str = "\
automaton G
clock x
action a owner 1
loc l0 init prio [1]
loc l1 prio [0]
edge l0 -> l1 on a when true reset {}
edge l1 -> l1 on a when true reset {}
";

const TRACE: &str = "prefix:\ncycle:\nl0 0 a\nl1 3/2 a\nl2 0 a\n";

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn twp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twp")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn verify_violated_with_lasso() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "ring.ta", RING);
    for extra in [&[][..], &["--direct"], &["--product"], &["--direct", "--product"]] {
        let mut args = vec!["verify", s(&m), "--lambda", "1"];
        args.extend_from_slice(extra);
        let o = twp(&args);
        assert_eq!(code(&o), 1, "{extra:?}");
        let out = stdout(&o);
        assert!(out.starts_with("VIOLATED"));
        assert!(out.contains("cycle:"));
    }
}

#[test]
fn verify_printed_lasso_is_a_valid_trace() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "ring.ta", RING);
    let o = twp(&["verify", s(&m), "--lambda", "2", "--direct", "--json"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let t = file(&dir, "cex.trace", v["witness"].as_str().unwrap());
    let dtw = twp(&["check-trace", s(&m), s(&t), "--lambda", "2", "--objective", "dtw"]);
    assert_eq!(code(&dtw), 1);
    let parity = twp(&["check-trace", s(&m), s(&t), "--lambda", "2", "--objective", "parity"]);
    assert_eq!(code(&parity), 0);
}

#[test]
fn verify_holds() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "even.ta", EVEN);
    let o = twp(&["verify", s(&m), "--lambda", "1", "--direct"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("HOLDS"));
}

#[test]
fn bad_lambda_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "ring.ta", RING);
    assert_eq!(code(&twp(&["verify", s(&m), "--lambda", "0"])), 2);
    assert_eq!(code(&twp(&["verify", s(&m), "--lambda", "1,2"])), 2);
    assert_eq!(code(&twp(&["verify", s(&m)])), 2);
    assert_eq!(code(&twp(&["verify", "/nonexistent.ta", "--lambda", "1"])), 2);
}

#[test]
fn json_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "ring.ta", RING);
    let a = twp(&["verify", s(&m), "--lambda", "1", "--json"]);
    let b = twp(&["verify", s(&m), "--lambda", "1", "--json"]);
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    assert_eq!(v["schema"], 1);
    assert_eq!(v["verdict"], "violated");
    assert_eq!(v["objective"], "tw");
}

#[test]
fn verify_writes_region_dot() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "ring.ta", RING);
    let dot = dir.path().join("r.dot");
    twp(&["verify", s(&m), "--lambda", "1", "--dot", s(&dot)]);
    assert!(std::fs::read_to_string(dot).unwrap().starts_with("digraph"));
}

#[test]
fn realize_controllable_writes_strategy() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "g.tg", GAME);
    let strat = dir.path().join("g.strategy");
    for direct in [true, false] {
        let mut args = vec!["realize", s(&m), "--lambda", "1", "--strategy", s(&strat)];
        if direct {
            args.push("--direct");
        }
        let o = twp(&args);
        assert_eq!(code(&o), 0);
        assert!(stdout(&o).starts_with("PLAYER 1 WINS"));
        let text = std::fs::read_to_string(&strat).unwrap();
        assert!(text.lines().any(|l| l.starts_with("l0") && l.ends_with(" a")), "{text}");
    }
}

#[test]
fn realize_uncontrollable_loses() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "g.tg", &GAME.replace("owner 1", "owner 2"));
    let o = twp(&["realize", s(&m), "--lambda", "1", "--json"]);
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["verdict"], "loses");
    assert!(v["witness"].is_null());
}

#[test]
fn realize_rejects_automata() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "ring.ta", RING);
    assert_eq!(code(&twp(&["realize", s(&m), "--lambda", "1"])), 2);
}

#[test]
fn expand_round_trips() {
    let dir = TempDir::new().unwrap();
    for (name, text) in [("ring.ta", RING), ("g.tg", GAME)] {
        let m = file(&dir, name, text);
        let o = twp(&["expand", s(&m), "--lambda", "2"]);
        assert_eq!(code(&o), 0);
        let out = stdout(&o);
        let parsed = parse_model(&out).unwrap();
        assert_eq!(twp_core::parse::emit_model(&parsed), out);
        assert_eq!(matches!(parsed, Model::Game(_)), name.ends_with(".tg"));
    }
}

#[test]
fn expand_dot_marks_reachable_fragment() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "ring.ta", RING);
    let dot = dir.path().join("x.dot");
    let o = twp(&["expand", s(&m), "--lambda", "2", "--dot", s(&dot)]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dot).unwrap();
    let reachable: BTreeSet<&str> = text
        .lines()
        .filter(|l| l.contains("[label=") && !l.contains("->") && !l.contains("dotted"))
        .map(|l| l.trim().split(' ').next().unwrap())
        .collect();
    assert_eq!(reachable.len(), 6);
    let edges = text
        .lines()
        .filter(|l| l.contains("->") && !l.contains("dotted"))
        .filter(|l| !l.contains("__beta2"))
        .count();
    assert_eq!(edges, 8);
}

#[test]
fn check_trace_objectives() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "ring.ta", RING);
    let t = file(&dir, "pi.trace", TRACE);
    let run = |obj: &str| twp(&["check-trace", s(&m), s(&t), "--lambda", "1", "--objective", obj]);
    let parity = run("parity");
    assert_eq!(code(&parity), 0);
    assert_eq!(stdout(&parity), "dimension 1: true\n");
    assert_eq!(code(&run("dtw")), 1);
    assert_eq!(code(&run("tw")), 1);
}

#[test]
fn check_trace_reports_offending_line() {
    let dir = TempDir::new().unwrap();
    let m = file(&dir, "ring.ta", RING);
    let t = file(&dir, "bad.trace", "prefix:\ncycle:\nl0 3 a\n");
    let o = twp(&["check-trace", s(&m), s(&t), "--lambda", "1", "--objective", "dtw"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

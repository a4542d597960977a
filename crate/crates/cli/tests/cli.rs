use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn argx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_argx"))
        .args(args)
        .env_remove("ARGX_SEED")
        .output()
        .expect("argx runs")
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn example() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/ex2.json")
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}

fn run_example(dir: &Path, mu: &str, eta: &str) -> PathBuf {
    let out = dir.join(format!("{}-{}.jsonl", mu.replace(':', "_"), eta.replace(':', "_")));
    let o = argx(&[
        "run",
        "--scenario",
        p(&example()),
        "--mu",
        mu,
        "--eta",
        eta,
        "--mu-bias",
        "constant:0.5",
        "--seed",
        "3",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn gen_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    assert!(argx(&["gen", "--seed", "5", "--out", p(&a)]).status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_argx"))
        .args(["gen", "--out", p(&b)])
        .env("ARGX_SEED", "5")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let other = argx(&["gen", "--seed", "6"]);
    assert_ne!(other.stdout, fs::read(&a).unwrap());
}

#[test]
fn gen_with_one_semantics() {
    let o = argx(&["gen", "--seed", "1", "--semantics", "qem"]);
    assert!(o.status.success());
    let s = text(&o);
    assert!(s.contains("\"qem\""));
    assert!(!s.contains("\"df-quad\""));
    assert_eq!(argx(&["gen", "--semantics", "fuzzy"]).status.code(), Some(2));
}

#[test]
fn run_check_replay_and_dot() {
    let dir = tempfile::tempdir().unwrap();
    let t = run_example(dir.path(), "greedy", "counterfactual");

    let check = argx(&["check", "--transcript", p(&t)]);
    assert_eq!(check.status.code(), Some(0));
    let out = text(&check);
    assert!(out.contains("connectedness: holds"));
    assert!(out.contains("experiment,cell,behaviour_mu"));
    assert!(out.lines().last().unwrap().contains(",G,C,"));

    let one = argx(&["check", "--transcript", p(&t), "--property", "acyclicity"]);
    assert_eq!(text(&one).lines().filter(|l| l.contains(": ")).count(), 1);
    assert_eq!(argx(&["check", "--transcript", p(&t), "--property", "nope"]).status.code(), Some(2));

    let replay = argx(&["replay", "--transcript", p(&t)]);
    assert_eq!(replay.status.code(), Some(0));
    assert!(text(&replay).starts_with("ok"));

    let dot = argx(&["export-dot", "--transcript", p(&t), "--t", "1"]);
    assert!(dot.status.success());
    let d = text(&dot);
    assert!(d.starts_with("digraph"));
    assert!(d.contains("\"a\" -> \"e\""));
    assert!(!d.contains("\"c\" -> \"a\""));
    assert_eq!(argx(&["export-dot", "--transcript", p(&t), "--t", "99"]).status.code(), Some(2));
}

#[test]
fn tampered_transcript_fails_replay() {
    let dir = tempfile::tempdir().unwrap();
    let t = run_example(dir.path(), "greedy", "counterfactual");
    let original = fs::read_to_string(&t).unwrap();
    // The human's recorded strength of e before anything is said.
    let tampered = original.replacen("\"e\":0.712", "\"e\":0.713", 1);
    assert_ne!(original, tampered);
    fs::write(&t, tampered).unwrap();
    let o = argx(&["replay", "--transcript", p(&t)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(text(&o).starts_with("mismatch at timestep"));
}

#[test]
fn bad_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.jsonl");
    fs::write(&junk, "not json\n").unwrap();
    assert_eq!(argx(&["replay", "--transcript", p(&junk)]).status.code(), Some(2));
    assert_eq!(argx(&["run", "--scenario", "/no/such/file.json"]).status.code(), Some(2));
    assert_eq!(
        argx(&["run", "--scenario", p(&example()), "--eta-bias", "constant:7"]).status.code(),
        Some(2)
    );
    assert_eq!(argx(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(argx(&["simulate", "--hypothesis", "custom"]).status.code(), Some(2));
}

#[test]
fn simulate_writes_csv_and_transcripts() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("h5.csv");
    let tdir = dir.path().join("runs");
    let o = argx(&[
        "simulate",
        "--hypothesis",
        "h5",
        "--runs",
        "6",
        "--seed",
        "4",
        "--out",
        p(&csv),
        "--transcripts",
        p(&tdir),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let body = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("h5,G c=0.5,G,C,0.5,-0.2,"));
    assert!(lines[2].starts_with("h5,C c=0.5,C,C,0.5,-0.2,"));
    let files: Vec<_> = fs::read_dir(&tdir).unwrap().collect();
    assert_eq!(files.len(), 12);
    let one = tdir.join("run0003_c_c_0.5.jsonl");
    assert_eq!(argx(&["replay", "--transcript", p(&one)]).status.code(), Some(0));

    let serial = dir.path().join("serial.csv");
    let o = argx(&[
        "simulate",
        "--hypothesis",
        "h5",
        "--runs",
        "6",
        "--seed",
        "4",
        "--serial",
        "--out",
        p(&serial),
    ]);
    assert!(o.status.success());
    assert_eq!(fs::read(&csv).unwrap(), fs::read(&serial).unwrap());
}

#[test]
fn simulate_with_knobs_and_custom_config() {
    let dir = tempfile::tempdir().unwrap();
    let knobs = dir.path().join("knobs.json");
    fs::write(&knobs, r#"{"machine_biases": [0.0, 0.25, 1.0]}"#).unwrap();
    let o = argx(&["simulate", "--hypothesis", "h4", "--runs", "3", "--config", p(&knobs)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(text(&o).contains("G c=0.25"));

    let custom = dir.path().join("custom.json");
    let cfg = r#"{
        "name": "mine",
        "runs": 2,
        "seed": 1,
        "cells": [{
            "label": "G vs S",
            "mu": {"contribution": {"kind": "greedy"}, "bias": {"kind": "constant", "c": 0.5}},
            "eta": {"contribution": {"kind": "shallow", "max": 2}, "bias": {"kind": "random"}}
        }]
    }"#;
    fs::write(&custom, cfg).unwrap();
    let o = argx(&["simulate", "--hypothesis", "custom", "--config", p(&custom)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = text(&o);
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[..4], ["mine", "G vs S", "G", "S (2)"]);
    assert_eq!(row.len(), 14);
    assert_eq!(row[12], "2");
}

// SPDX-License-Identifier: Apache-2.0

//! The `tzlab` binary end to end: stage artifacts, exit codes and
//! reproducibility.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn tzlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tzlab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn c880_pipeline_clean_and_additive_control_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    for stage in [
        &["analyze", "c880"][..],
        &["atpg", "c880"],
        &["salvage", "c880"],
        &["inject", "c880"],
    ] {
        let o = tzlab(out, stage);
        assert_eq!(code(&o), 0, "{stage:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    for f in [
        "config.json",
        "probabilities.csv",
        "suite.pat",
        "salvaged.bench",
        "infected.bench",
        "attack_sequence.pat",
    ] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let o = tzlab(out, &["detect", "c880"]);
    assert_eq!(code(&o), 0);
    let v = json(&out.join("detect-infected.json"));
    assert_eq!(v["result"]["overall"], "CLEAN");

    assert_eq!(code(&tzlab(out, &["inject", "c880", "--no-salvage"])), 0);
    let control = out.join("control.bench");
    let o = tzlab(out, &["detect", "c880", control.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    let v = json(&out.join("detect-control.json"));
    assert_eq!(v["result"]["overall"], "FLAGGED");
    assert_eq!(v["config"]["seeds"]["bespoke"], 0xB35_90CE);

    let o = tzlab(out, &["report"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FLAGGED"));
}

#[test]
fn analyze_is_reproducible_and_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&tzlab(out, &["analyze", "c17", "--monte-carlo"])), 0);
    let first: Vec<Vec<u8>> = ["analyze.json", "probabilities.csv", "probabilities_mc.csv"]
        .iter()
        .map(|f| fs::read(out.join(f)).unwrap())
        .collect();
    assert_eq!(code(&tzlab(out, &["analyze", "c17", "--monte-carlo"])), 0);
    for (f, before) in ["analyze.json", "probabilities.csv", "probabilities_mc.csv"]
        .iter()
        .zip(&first)
    {
        assert_eq!(&fs::read(out.join(f)).unwrap(), before, "{f} changed");
    }
    let o = tzlab(out, &["analyze", "c880", "--exact"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("enumeration bound"));
}

#[test]
fn exhaustion_has_its_own_exit_code_and_keeps_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&tzlab(out, &["atpg", "c432"])), 0);
    assert_eq!(code(&tzlab(out, &["salvage", "c432"])), 0);
    let o = tzlab(out, &["inject", "c432", "--epsilon", "0"]);
    assert_eq!(code(&o), 3);
    let v = json(&out.join("inject.json"));
    assert_eq!(v["status"], "exhausted");
    assert!(!v["result"]["tried"].as_array().unwrap().is_empty());
}

#[test]
fn golden_against_itself_is_clean() {
    let dir = tempfile::tempdir().unwrap();
    let o = tzlab(dir.path(), &["detect", "c17", "c17"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&dir.path().join("detect-c17.json"))["status"], "clean");
}

#[test]
fn usage_and_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(code(&tzlab(out, &["frobnicate"])), 1);
    assert_eq!(code(&tzlab(out, &["--help"])), 0);
    assert_eq!(code(&tzlab(out, &["analyze", "no-such-circuit"])), 1);
    // Salvage needs the suite from the atpg stage.
    let o = tzlab(out, &["salvage", "c17"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("tzlab atpg"));
}

#[test]
fn config_file_seeds_are_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let cfg = out.join("run.json");
    fs::write(
        &cfg,
        r#"{"netlist": "c17", "seeds": {"atpg": 9, "bespoke": 8, "montecarlo": 7, "workload": 6}}"#,
    )
    .unwrap();
    let o = tzlab(
        out,
        &["--config", cfg.to_str().unwrap(), "--seed-workload", "5", "atpg"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out.join("atpg.json"));
    assert_eq!(v["config"]["seeds"]["atpg"], 9);
    assert_eq!(v["config"]["seeds"]["workload"], 5);
    assert_eq!(v["result"]["suite"]["seed"], 9);
    assert_eq!(json(&out.join("config.json"))["seeds"]["montecarlo"], 7);
}

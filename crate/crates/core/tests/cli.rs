mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::{micro_instance, truncated_reference};
use hybrid_bid::instance::write_direction_sequences;
use hybrid_bid::prelude::*;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybrid-bid"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).expect("error is JSON")
}

struct Fixture {
    _dir: tempfile::TempDir,
    root: PathBuf,
    instance: PathBuf,
    directions: PathBuf,
}

fn fixture(inst: &Instance) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().to_path_buf();
    let instance = root.join("instance.json");
    inst.save(&instance).unwrap();
    let n = inst.n_periods();
    let seqs: Vec<DirectionSequence> = hybrid_bid::reference::directions()
        .into_iter()
        .take(5)
        .map(|d| DirectionSequence::new(d.directions[..n].to_vec()))
        .collect();
    let directions = root.join("directions.csv");
    write_direction_sequences(&directions, &seqs).unwrap();
    Fixture { _dir: dir, root, instance, directions }
}

#[test]
fn solve_writes_solution_and_breakdown() {
    let f = fixture(&truncated_reference(4, 2));
    let out = f.root.join("out");
    let res = run(&["solve", "--instance", s(&f.instance), "--gamma", "2", "--out", s(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let sol = Solution::load(out.join("solution.json")).unwrap();
    assert_eq!(sol.gamma, 2);
    let breakdown: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("breakdown.json")).unwrap()).unwrap();
    let total = breakdown["total"].as_f64().unwrap();
    assert!(common::rel_close(total, sol.objective, 1e-4));
}

#[test]
fn sweep_is_idempotent() {
    let f = fixture(&truncated_reference(4, 2));
    let mut outputs = Vec::new();
    for name in ["a", "b"] {
        let out = f.root.join(name);
        let res = run(&[
            "sweep", "--instance", s(&f.instance), "--gammas", "0..4",
            "--directions", s(&f.directions), "--out", s(&out),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        outputs.push(out);
    }
    let sweep = std::fs::read_to_string(outputs[0].join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 6);
    for name in ["sweep.csv", "positions.csv", "soe.csv", "electrolyzer.csv"] {
        let a = std::fs::read(outputs[0].join(name)).unwrap();
        let b = std::fs::read(outputs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn reference_sweep_has_a_row_per_budget() {
    let f = fixture(&hybrid_bid::reference::instance());
    let out = f.root.join("out");
    let res = run(&[
        "sweep", "--instance", s(&f.instance), "--gammas", "0..24",
        "--directions", s(&f.directions), "--out", s(&out), "--time-limit", "1",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let sweep = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 26);
}

#[test]
fn ablate_writes_a_summary() {
    let f = fixture(&truncated_reference(3, 2));
    let out = f.root.join("out");
    let res = run(&["ablate", "--instance", s(&f.instance), "--gammas", "0,3", "--out", s(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary = std::fs::read_to_string(out.join("ablation.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(out.join("pv_el_bat").join("sweep.csv").exists());
}

#[test]
fn evaluate_settles_a_stored_solution() {
    let f = fixture(&truncated_reference(4, 2));
    let out = f.root.join("out");
    assert!(run(&["solve", "--instance", s(&f.instance), "--gamma", "1", "--out", s(&out)]).status.success());
    let res = run(&[
        "evaluate", "--instance", s(&f.instance), "--solution", s(&out.join("solution.json")),
        "--directions", s(&f.directions), "--out", s(&out),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("evaluation.json")).unwrap()).unwrap();
    assert_eq!(eval["imbalance_per_sequence"].as_array().unwrap().len(), 5);
}

#[test]
fn verify_accepts_a_fresh_micro_solve() {
    let f = fixture(&micro_instance(3));
    let out = f.root.join("out");
    let res = run(&["verify", "--instance", s(&f.instance), "--gamma", "1", "--out", s(&out)]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert!(report["enumeration"]["best_profit"].is_number());
}

#[test]
fn verify_rejects_corrupted_solutions() {
    let f = fixture(&micro_instance(3));
    let out = f.root.join("out");
    assert!(run(&["solve", "--instance", s(&f.instance), "--gamma", "1", "--out", s(&out)]).status.success());
    let path = out.join("solution.json");

    let mut sol = Solution::load(&path).unwrap();
    sol.first_stage.mp[0] += 5.0;
    let tampered = f.root.join("tampered.json");
    sol.save(&tampered).unwrap();
    let res = run(&["verify", "--instance", s(&f.instance), "--gamma", "1", "--solution", s(&tampered), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(3));
    assert_eq!(error_json(&res)["exit_code"], 3);

    let garbage = f.root.join("garbage.json");
    std::fs::write(&garbage, "{\"gamma\": 1, \"first_stage\": ").unwrap();
    let res = run(&["verify", "--instance", s(&f.instance), "--gamma", "1", "--solution", s(&garbage), "--out", s(&out)]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn invalid_inputs_exit_one() {
    let f = fixture(&truncated_reference(4, 1));
    let res = run(&["solve", "--instance", s(&f.instance), "--gamma", "9"]);
    assert_eq!(res.status.code(), Some(1));
    assert_eq!(error_json(&res)["error"], "validation");

    let res = run(&["solve", "--instance", "/nonexistent.json"]);
    assert_eq!(res.status.code(), Some(1));

    let res = run(&["sweep", "--instance", s(&f.instance), "--gammas", "0..30"]);
    assert_eq!(res.status.code(), Some(1));

    let res = run(&["solve", "--instance", s(&f.instance), "--backend", "nope"]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn solver_failure_exits_two() {
    let f = fixture(&truncated_reference(2, 1));
    let res = run(&[
        "solve", "--instance", s(&f.instance), "--backend", "lp-file:/nonexistent/solver",
        "--out", s(&f.root.join("out")),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(error_json(&res)["error"], "solver");
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use actinf::env::tmaze::{build_tmaze_model, TMazeOptions};
use actinf::model::save_model;

fn actinf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_actinf")).args(args).output().unwrap()
}

fn run_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    actinf(&args)
}

#[test]
fn walkthrough_tables() {
    let out = actinf(&[
        "--model", "tmaze", "--episodes", "1", "--mode", "greedy", "--force-reward-side", "right", "--seed", "7",
        "--emit-tables",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.091"));
    assert!(text.contains("0.523"));
    assert!(text.contains("\n1.000\n"));
}

#[test]
fn config_errors_exit_with_2() {
    assert_eq!(actinf(&["--episodes", "0", "--mode", "greedy"]).status.code(), Some(2));
    assert_eq!(actinf(&["--mode", "sample"]).status.code(), Some(2));
    assert_eq!(actinf(&["--mode", "bogus"]).status.code(), Some(2));
    assert_eq!(actinf(&["--model", "/no/such/model.json", "--mode", "greedy"]).status.code(), Some(2));
    assert_eq!(actinf(&["--c-normalize", "maybe"]).status.code(), Some(2));
    assert_eq!(actinf(&["--unknown-flag"]).status.code(), Some(2));
}

#[test]
fn identical_runs_write_identical_logs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let flags = ["--episodes", "5", "--mode", "sample", "--seed", "1234", "--learn"];
    assert!(run_into(a.path(), &flags).status.success());
    assert!(run_into(b.path(), &flags).status.success());
    let la = fs::read(a.path().join("trajectory.jsonl")).unwrap();
    let lb = fs::read(b.path().join("trajectory.jsonl")).unwrap();
    assert!(!la.is_empty());
    assert_eq!(la, lb);
    assert!(a.path().join("alpha.json").exists());

    let c = tempfile::tempdir().unwrap();
    run_into(c.path(), &["--episodes", "5", "--mode", "sample", "--seed", "1235", "--learn"]);
    assert_ne!(la, fs::read(c.path().join("trajectory.jsonl")).unwrap());
}

#[test]
fn trajectory_lines_are_json_with_normalised_posteriors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_into(dir.path(), &["--episodes", "3", "--mode", "sample", "--seed", "9"]).status.success());
    let log = fs::read_to_string(dir.path().join("trajectory.jsonl")).unwrap();
    let mut episodes = 0;
    for line in log.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        match v["kind"].as_str().unwrap() {
            "step" => {
                let total: f64 = v["policies"]
                    .as_array()
                    .unwrap()
                    .iter()
                    .map(|p| p["probability"].as_f64().unwrap())
                    .sum();
                assert!((total - 1.0).abs() < 1e-9);
            }
            "episode" => {
                episodes += 1;
                assert!(v["realized_utility"].as_f64().unwrap().is_finite());
            }
            other => panic!("unexpected record kind {other}"),
        }
    }
    assert_eq!(episodes, 3);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["rng"], "ChaCha8Rng");
    assert_eq!(summary["episodes"].as_array().unwrap().len(), 3);
}

#[test]
fn model_files_run_through_the_generic_sampler() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("maze.json");
    save_model(&build_tmaze_model(TMazeOptions::literal()).model, &path).unwrap();
    let out = actinf(&["--model", path.to_str().unwrap(), "--mode", "greedy", "--episodes", "2", "--learn"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let forced = actinf(&["--model", path.to_str().unwrap(), "--mode", "greedy", "--force-reward-side", "left"]);
    assert_eq!(forced.status.code(), Some(2));
}

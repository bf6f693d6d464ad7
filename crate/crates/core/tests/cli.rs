use std::process::{Command, Output};

use pruned_polar::CodeSpec64;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pruned-polar")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn construct_to_stdout_matches_golden() {
    let out = run(&["construct", "--z0", "0.5", "--epsilon", "0.8", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.trim_end(), include_str!("data/worked_example.json").trim_end());
    let spec = CodeSpec64::from_json(text.trim_end()).unwrap();
    assert_eq!(*spec.rate(), 0.25);
}

#[test]
fn construct_is_byte_identical_across_runs() {
    let args = ["construct", "--z0", "0.382", "--epsilon", "0.01"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn simulate_is_reproducible_for_a_seed() {
    let args = ["simulate", "--z0", "0.382", "--epsilon", "0.25", "--n", "8", "--trials", "5000", "--seed", "7"];
    let parse = |o: Output| {
        let mut v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("wall_time_per_info_bit");
        v
    };
    let a = parse(run(&args));
    assert_eq!(a, parse(run(&args)));
    assert_eq!(a["trials"], 5000);
    assert!(a["block_errors"].as_u64().unwrap() < 5000);
}

#[test]
fn simulate_threads_do_not_change_counts() {
    let args = ["simulate", "--z0", "0.382", "--epsilon", "0.25", "--n", "8", "--trials", "3000"];
    let errors = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_pruned-polar"))
            .args(args)
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        v["block_errors"].as_u64().unwrap()
    };
    assert_eq!(errors("1"), errors("4"));
}

#[test]
fn sweep_emits_csv_rows() {
    let out = run(&["sweep", "--z0", "0.382", "--n-min", "0", "--n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,epsilon,N,rate,p_bound,e_tau,time_per_info_bit");
    assert_eq!(lines.len(), 5);
    assert!(lines[3].starts_with("2,"));
    assert!(lines[3].contains(",1.5,"));
}

#[test]
fn export_then_reload_tree() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.json");
    let out = run(&["construct", "--z0", "0.5", "--epsilon", "0.8", "--n", "3", "--out", tree.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let positions = run(&["export", "--tree", tree.to_str().unwrap()]);
    assert_eq!(positions.status.code(), Some(0));
    let direct = run(&["export", "--z0", "0.5", "--epsilon", "0.8", "--n", "3"]);
    assert_eq!(positions.stdout, direct.stdout);
    let text = stdout(&positions);
    let info: Vec<&str> = text.lines().filter(|l| l.ends_with(",info")).collect();
    assert_eq!(info, ["6,2,0.0625,info", "7,2,0.0625,info"]);
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn tampered_tree_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let tree = dir.path().join("tree.json");
    let golden = include_str!("data/worked_example.json");
    std::fs::write(&tree, golden.replacen("0.0625", "0.0626", 1)).unwrap();
    let out = run(&["export", "--tree", tree.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_exit_codes() {
    assert_eq!(run(&["verify", "--lo", "0.9", "--hi", "1", "--subdivisions", "10000"]).status.code(), Some(0));
    assert_eq!(run(&["verify", "--lo", "0.9", "--hi", "1", "--subdivisions", "10"]).status.code(), Some(2));
}

#[test]
fn invalid_configurations_exit_one() {
    for args in [
        &["construct", "--z0", "2", "--epsilon", "0.5"][..],
        &["construct", "--z0", "0.5", "--epsilon=-1"],
        &["construct", "--z0", "0.5"],
        &["construct", "--z0", "0.5", "--epsilon", "0.5", "--trials", "10"],
        &["verify", "--lo", "1", "--hi", "0.9"],
        &["simulate", "--z0", "0.5", "--epsilon", "0.5", "--trials", "0"],
        &["frobnicate"],
    ] {
        assert_eq!(run(args).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

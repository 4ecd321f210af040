use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cayleylab"))
        .args(args)
        .current_dir(dir)
        .env_remove("CAYLEYLAB_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    for (name, body) in [("bad.json", "{\"eta\": "), ("unknown.json", "{\"etaa\": 0.1}"), ("range.json", "{\"eta\": 0.3}")] {
        std::fs::write(dir.path().join(name), body).unwrap();
        let o = run(&["reduce", "--config", name, "--output", "out.json"], dir.path());
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(!dir.path().join("out.json").exists());
        let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
        assert_eq!(err["exit_code"], 2);
    }
}

#[test]
fn exhausted_search_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["reduce", "--slots", "0,1", "--grid-size", "10", "--eta", "0.2", "--delta", "0", "--budget", "4"], dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn cp_decay_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["cp-decay", "--n", "3", "--gamma", "0.1", "--depths", "1..6", "--trials", "200", "--seed", "7"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "depth,closed_form,monte_carlo,stderr,z,worst_tv_slack");
    assert_eq!(lines.len(), 7);
    for line in &lines[1..] {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert!(f[4].abs() < 4.0, "{line}");
        assert!(f[5] <= 1e-12);
    }
}

#[test]
fn bounds_table_holds() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bounds", "--check", "all", "--dmax", "20", "--samples", "50"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().count() > 400);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")), "{text}");
}

#[test]
fn output_is_deterministic_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec!["reduce", "--seed", "11", "--eta", "0.1", "--grid-size", "1200", "--precision", "native", "--output", out]
    };
    assert!(run(&args("a.json"), dir.path()).status.success());
    assert!(run(&args("b.json"), dir.path()).status.success());
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    assert_eq!(a, std::fs::read(dir.path().join("b.json")).unwrap());
    let doc: serde_json::Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(doc["seed"], 11);
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2);
}

#[test]
fn flags_override_config_and_env_seed_applies() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cp.json"), r#"{"n": 2, "depths": [1, 2], "trials": 20, "seed": 4}"#).unwrap();
    let base = run(&["cp-decay", "--config", "cp.json"], dir.path());
    let flagged = run(&["cp-decay", "--config", "cp.json", "--depths", "1"], dir.path());
    assert_eq!(stdout(&base).lines().count(), 3);
    assert_eq!(stdout(&flagged).lines().count(), 2);
    assert_eq!(stdout(&base).lines().nth(1), stdout(&flagged).lines().nth(1));

    let with_env = Command::new(env!("CARGO_BIN_EXE_cayleylab"))
        .args(["cp-decay", "--n", "2", "--depths", "1", "--trials", "20"])
        .env("CAYLEYLAB_SEED", "4")
        .output()
        .unwrap();
    let with_flag = run(&["cp-decay", "--n", "2", "--depths", "1", "--trials", "20", "--seed", "4"], dir.path());
    assert_eq!(with_env.stdout, with_flag.stdout);
}

#[test]
fn extended_reduction_recovers_target() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["reduce-noisy", "--seed", "2", "--eta", "0.1", "--grid-size", "2000", "--gamma", "0.1"], dir.path());
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(doc["achieved_error"].as_f64().unwrap() < 1e-6);
    assert!(doc["uniformity"]["gap"].as_f64().unwrap() > 0.0);
    assert!(doc["estimate"].as_str().unwrap().len() > 30);
}

#[test]
fn permanent_and_fourier_targets() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["permanent-reduce", "--x0", "1,1,0;0,1,1;1,0,1", "--seed", "1"], dir.path());
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(doc["achieved_error"].as_f64().unwrap() < 1e-6);
    assert!(doc["truth"].as_str().unwrap().starts_with("4.0000"));

    let o = run(&["reduce", "--truth-table", "1,1,-1,-1", "--grid-size", "2000", "--eta", "0.05"], dir.path());
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(doc["achieved_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn remaining_subcommands_emit_csv() {
    let dir = tempfile::tempdir().unwrap();
    for (args, header) in [
        (vec!["rational-check", "--n", "3", "--depth", "1", "--seeds", "2"], "seed,degree,"),
        (vec!["tv-scan", "--thetas", "0,0.2", "--samples", "500"], "theta,tv,"),
        (vec!["barrier-demo", "--samples", "20"], "theta,mean_deviation,"),
    ] {
        let o = run(&args, dir.path());
        assert!(o.status.success(), "{args:?}");
        assert!(stdout(&o).starts_with(header));
    }
    let o = run(&["rational-check", "--layout", "zigzag"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

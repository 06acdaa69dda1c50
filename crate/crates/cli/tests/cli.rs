use std::process::{Command, Output};

use serde_json::Value;

fn qsdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsdc"))
        .args(args)
        .env_remove("QSDC_SEED")
        .output()
        .expect("qsdc runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json_lines(out: &Output) -> Vec<Value> {
    stdout(out).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn simulate_without_eve_exits_zero_and_delivers_every_bit() {
    let out = qsdc(&["simulate", "--c", "0.3", "--bits", "16", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let lines = json_lines(&out);
    let summary = &lines.last().unwrap()["summary"];
    assert_eq!(summary["aborted"], false);
    assert_eq!(summary["stats"]["delivered_bits"], 16);
    assert_eq!(summary["stats"]["bit_errors"], 0);
    let first = &lines[0];
    for key in ["round_index", "mode", "alice_prep", "bob_action", "eve_events", "alice_outcome", "sifted", "detected", "decoded_bit"] {
        assert!(first.get(key).is_some(), "missing {key} in {first}");
    }
}

#[test]
fn detected_eavesdropper_exits_two() {
    let out = qsdc(&["simulate", "--c", "0.5", "--bits", "200", "--eve", "intercept-both", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let lines = json_lines(&out);
    let summary = &lines.last().unwrap()["summary"];
    assert_eq!(summary["aborted"], true);
    assert!(summary["abort_round"].is_u64());
}

#[test]
fn out_of_range_probability_is_rejected_with_range_message() {
    let out = qsdc(&["simulate", "--c", "1.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("[0,1]"), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
}

#[test]
fn invalid_input_does_not_create_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("never.json");
    let out = qsdc(&["formula", "--c", "1", "--d", "0", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!path.exists());

    let out = qsdc(&["keygen", "--raw-bits", "8", "--final-bits", "16", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--final-bits"));
    assert!(!path.exists());
}

#[test]
fn unknown_strategy_and_small_trials_are_usage_errors() {
    assert_eq!(qsdc(&["simulate", "--eve", "sneaky"]).status.code(), Some(1));
    let out = qsdc(&["sweep", "--c", "0.1", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("1000"));
    assert_eq!(qsdc(&["sweep", "--c", "1.0"]).status.code(), Some(1));
}

#[test]
fn formula_prints_pinned_values() {
    let out = qsdc(&["formula", "--c", "0.5", "--d", "0.5", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = &json_lines(&out)[0];
    assert_eq!(v["s_one"], 0.6666666667);
    assert_eq!(v["s_n"], 0.4444444444);
    assert_eq!(v["rate"], 0.5);
}

#[test]
fn sweep_csv_has_header_and_one_row_per_cell() {
    let out = qsdc(&["sweep", "--c", "0.1,0.5", "--eve", "none,intercept-ba", "--trials", "2000"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "c,d_exact,strategy,survival_formula,survival_mc,ci95,trials");
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 7));
}

#[test]
fn seed_comes_from_environment_when_flag_absent() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_qsdc"));
        cmd.args(["simulate", "--bits", "8"]).env_remove("QSDC_SEED");
        if let Some(s) = env {
            cmd.env("QSDC_SEED", s);
        }
        if let Some(s) = flag {
            cmd.args(["--seed", s]);
        }
        cmd.output().unwrap().stdout
    };
    assert_eq!(run(Some("99"), None), run(None, Some("99")));
    assert_ne!(run(Some("99"), None), run(None, Some("98")));
}

#[test]
fn out_flag_writes_file_instead_of_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("key.json");
    let out = qsdc(&["keygen", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["status"], "established");
    assert_eq!(v["keys_match"], true);
    assert_eq!(v["alice_key"].as_str().unwrap().len(), 16);
}

#[test]
fn selftest_warns_when_trials_are_too_few() {
    let out = qsdc(&["selftest", "--trials", "100"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stderr(&out).contains("warning"));
    assert!(stdout(&out).contains("SKIP"));
    assert!(!stdout(&out).contains("FAIL"));
}

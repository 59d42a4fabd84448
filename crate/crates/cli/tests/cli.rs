use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_promise-info"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

const DEAF: &str = "scenario deaf
seed 1
ticks 200

[agents]
S R

[promises]
S +tau{A,B} -> R

[policies]
S +tau -> R uniform every 1

[analysis]
bindings
structural S R
rejects R

[expect]
bindings == 0
structural.S.R == INDEPENDENT
";

#[test]
fn validate_accepts_corpus_names_and_files() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("deaf.scn"), DEAF).unwrap();
    let out = cli(&["validate", "deaf.scn"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("deaf: ok"));

    let out = cli(&["validate", "case2_ack"], dir.path());
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn validation_problems_exit_one_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let bad = DEAF.replace("S +tau{A,B} -> R", "S +tau{A,B} -> R scope:{Q}");
    fs::write(dir.path().join("bad.scn"), bad).unwrap();
    let out = cli(&["validate", "bad.scn"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 9") && err.contains('Q'), "{err}");

    fs::write(dir.path().join("empty.scn"), "").unwrap();
    assert_eq!(cli(&["validate", "empty.scn"], dir.path()).status.code(), Some(1));
    assert_eq!(cli(&["validate", "missing.scn"], dir.path()).status.code(), Some(1));
}

#[test]
fn run_twice_gives_identical_logs() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a.log", "b.log"] {
        let o = cli(&["run", "case2_full_overlap", "--seed", "7", "--ticks", "500", "--out", out], dir.path());
        assert_eq!(o.status.code(), Some(0));
    }
    let a = fs::read(dir.path().join("a.log")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b.log")).unwrap());
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn analyze_then_report() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("deaf.scn"), DEAF).unwrap();
    assert_eq!(cli(&["run", "deaf.scn", "--out", "deaf.log"], dir.path()).status.code(), Some(0));
    let out = cli(&["analyze", "deaf.log", "deaf.scn", "--out", "deaf.json"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let json = fs::read_to_string(dir.path().join("deaf.json")).unwrap();
    for key in ["\"scenario\"", "\"seed\"", "\"ticks\"", "\"distributions\"", "\"joints\"", "\"info_reports\"", "\"verdicts\""] {
        assert!(json.contains(key), "missing {key}");
    }

    let out = cli(&["report", "deaf.json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("MET") && text.contains("2/2 expectations met"), "{text}");

    let out = cli(&["analyze", "deaf.log", "deaf.scn", "--format", "csv"], dir.path());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("section,name,key,value\n"));
}

#[test]
fn unmet_expectations_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let wrong = DEAF.replace("bindings == 0", "bindings == 1");
    fs::write(dir.path().join("wrong.scn"), &wrong).unwrap();
    cli(&["run", "wrong.scn", "--out", "wrong.log"], dir.path());
    let out = cli(&["analyze", "wrong.log", "wrong.scn", "--out", "wrong.json"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("VIOLATED"));
    // The report is still written in full.
    assert!(fs::read_to_string(dir.path().join("wrong.json")).unwrap().ends_with("}\n"));
}

#[test]
fn log_from_another_scenario_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("deaf.scn"), DEAF).unwrap();
    cli(&["run", "case1", "--out", "case1.log"], dir.path());
    let out = cli(&["analyze", "case1.log", "deaf.scn", "--out", "r.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn corpus_root_overrides_embedded_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("case1.scn"), DEAF.replace("scenario deaf", "scenario case1")).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_promise-info"))
        .args(["run", "case1"])
        .env(promise_info::scenario::CORPUS_ENV, dir.path())
        .output()
        .unwrap();
    let log = String::from_utf8_lossy(&out.stdout);
    assert!(log.contains("# ticks 200"), "{log}");
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn uclab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uclab"))
        .args(args)
        .env_remove("UCLAB_CAP")
        .output()
        .expect("run uclab")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn version_names_format() {
    let out = uclab(&["--version"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("family format 1"));
}

#[test]
fn construct_materialized_smallest() {
    let out = uclab(&["construct", "--k", "3", "--m", "2", "--s", "1", "--materialize"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "n=6\n1,2,3\n1,2,3,4\n4,5,6\n1,4,5,6\n1,2,3,4,5,6\n");
}

#[test]
fn construct_implicit_json_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bf.json");
    let out = uclab(&[
        "construct", "--k", "6", "--m", "2", "--s", "4", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["k"], 6);
    assert_eq!(v["t_sets"].as_array().unwrap().len(), 2);
}

#[test]
fn construct_counts_match_formula() {
    let out = uclab(&["construct", "--k", "6", "--m", "2", "--s", "4", "--materialize"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 1 + 33);
}

#[test]
fn construct_rejects_bad_s() {
    let out = uclab(&["construct", "--k", "3", "--m", "2", "--s", "2"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("s <= k-2"));
}

#[test]
fn construct_rejects_bad_t_sets() {
    let out = uclab(&["construct", "--k", "3", "--m", "2", "--s", "1", "--t-sets", "[[1,9]]"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn cap_exceeded_exits_3() {
    let out = uclab(&[
        "construct", "--k", "6", "--m", "3", "--s", "4", "--materialize", "--cap", "100",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn cap_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_uclab"))
        .args(["construct", "--k", "6", "--m", "3", "--s", "4", "--materialize"])
        .env("UCLAB_CAP", "100")
        .output()
        .unwrap();
    assert_eq!(code(&out), 3);
    let ok = Command::new(env!("CARGO_BIN_EXE_uclab"))
        .args(["construct", "--k", "6", "--m", "3", "--s", "4", "--materialize"])
        .env("UCLAB_CAP", "1000")
        .output()
        .unwrap();
    assert_eq!(code(&ok), 0);
}

#[test]
fn analyze_triple_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "triple.txt", "n=3\n-\n1\n1,2,3\n");
    let out = uclab(&["analyze", &file]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["avg_abundance"]["num"], "4");
    assert_eq!(v["avg_abundance"]["den"], "9");
    assert_eq!(v["aod"]["num"], "5");
    assert_eq!(v["aod"]["den"], "9");
    assert_eq!(v["is_union_closed"], true);
}

#[test]
fn analyze_rejects_only_empty_set() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "empty.txt", "n=3\n-\n");
    assert_eq!(code(&uclab(&["analyze", &file])), 2);
}

#[test]
fn analyze_rejects_malformed_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "bad.txt", "n=3\n2,1\n");
    let out = uclab(&["analyze", &file]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("line 2"));
    assert_eq!(code(&uclab(&["analyze", "/nonexistent/family.txt"])), 2);
}

#[test]
fn analyze_params_reports_bounds() {
    let out = uclab(&["analyze", "--k", "6", "--m", "2", "--s", "4"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let bounds = v["bounds"].as_object().unwrap();
    for (name, flag) in bounds {
        if name != "tau" {
            assert_eq!(flag, &serde_json::Value::Bool(true), "{name}");
        }
    }
}

#[test]
fn analyze_is_independent_of_workers() {
    let text = stdout(&uclab(&["construct", "--k", "5", "--m", "3", "--s", "3", "--materialize"]));
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "bf.txt", &text);
    let one = uclab(&["analyze", &file]);
    let four = uclab(&["--workers", "4", "analyze", &file]);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn oracle_check_passes() {
    let out = uclab(&["oracle-check", "--k-max", "5", "--m-max", "3"]);
    assert_eq!(code(&out), 0);
    assert!(!stdout(&out).contains("FAIL:"));
}

#[test]
fn oracle_check_skips_over_cap() {
    let out = uclab(&["oracle-check", "--k-max", "6", "--m-max", "3", "--cap", "500"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("SKIP"));
}

#[test]
fn oracle_check_fault_is_caught() {
    let out = uclab(&["oracle-check", "--k-max", "4", "--m-max", "2", "--inject-fault"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("missing"));
}

#[test]
fn sweep_is_deterministic_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let ra = uclab(&["sweep", "--from", "7", "--to", "12", "--csv", a.to_str().unwrap()]);
    let rb = uclab(&[
        "--workers", "3", "sweep", "--from", "7", "--to", "12", "--csv", b.to_str().unwrap(),
    ]);
    assert_eq!(code(&ra), 0);
    assert_eq!(code(&rb), 0);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ra.stdout, rb.stdout);
    let v = json(&ra);
    assert_eq!(v["rows"], 6);
    assert_eq!(v["aod"]["band_ok"], true);
    assert_eq!(v["avg_abundance"]["band_ok"], true);
}

#[test]
fn sweep_csv_on_stdout_without_file() {
    let out = uclab(&["sweep", "--from", "7", "--to", "9"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.starts_with("n_target,n,k,m,s,"));
    assert_eq!(text.lines().count(), 4);
    let band: serde_json::Value = serde_json::from_str(&stderr(&out)).unwrap();
    assert_eq!(band["rows"], 3);
}

#[test]
fn sweep_narrow_spread_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let out = uclab(&["sweep", "--from", "7", "--to", "9", "--spread", "1.01", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 5);
    let two = uclab(&["sweep", "--from", "7", "--to", "8", "--spread", "1.01", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&two), 5);
}

#[test]
fn sweep_rejects_reversed_range() {
    assert_eq!(code(&uclab(&["sweep", "--from", "9", "--to", "7"])), 2);
}

#[test]
fn separate_smallest_block_family() {
    let out = uclab(&["separate", "--k", "3", "--m", "2", "--s", "1", "--materialize"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["before"]["separates"], false);
    assert_eq!(v["before"]["witness_pairs"][0], serde_json::json!([2, 3]));
    assert_eq!(v["after"]["separates"], true);
    assert_eq!(v["after"]["size"], 11);
}

#[test]
fn separate_requires_full_set() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "nofull.txt", "n=3\n1\n1,2\n");
    assert_eq!(code(&uclab(&["separate", &file])), 2);
}

#[test]
fn examples_round_trip_through_analyze() {
    let out = uclab(&["examples", "--name", "chain", "--n", "9"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "n=9\n-\n1\n1,2\n1,2,3\n1,2,3,4,5,6,7,8,9\n");
    let dir = tempfile::tempdir().unwrap();
    let file = write(dir.path(), "chain.txt", &stdout(&out));
    assert_eq!(code(&uclab(&["analyze", &file])), 0);
    assert_eq!(code(&uclab(&["examples", "--name", "chain", "--n", "1"])), 2);
}

#[test]
fn zero_workers_is_rejected() {
    let out = uclab(&["--workers", "0", "examples", "--name", "triple"]);
    assert_ne!(code(&out), 0);
}

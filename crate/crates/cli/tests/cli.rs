use std::fs;
use std::process::{Command, Output};

use qkdbound::rates::read_csv;
use qkdbound::SessionTranscript;

fn qkdbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qkdbound")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bounds_reports_both_scales() {
    let o = qkdbound(&["bounds", "--eps", "-50", "--key-bits", "1e6"]);
    // key bits is an integer flag; scientific notation is rejected as usage
    assert_eq!(o.status.code(), Some(2));
    let o = qkdbound(&["bounds", "--eps", "-50", "--key-bits", "1000000"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("bound,log2,linear,exceeds_one\n"));
    assert!(out.contains("guessing_floor,-1000000,0,false"));
    assert!(out.contains("guessing_bound,-50,"));
}

#[test]
fn near_miss_flags_values_above_one() {
    let o = qkdbound(&["bounds", "--eps", "-50", "--key-bits", "1000000", "--qe", "2.5e-6"]);
    assert!(o.status.success());
    let line = stdout(&o).lines().find(|l| l.starts_with("near_miss_bound,")).unwrap().to_string();
    assert!(line.ends_with(",1,true"), "{line}");
}

#[test]
fn zero_epsilon_gives_the_floor() {
    let o = qkdbound(&["bounds", "--eps", "-inf", "--key-bits", "4", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["bounds"][1]["name"], "guessing_bound");
    assert_eq!(v["bounds"][1]["linear"], 0.0625);
}

#[test]
fn pa_bound_needs_both_inputs() {
    let o = qkdbound(&["bounds", "--eps", "-10", "--key-bits", "8", "--delta", "-8"]);
    assert_eq!(o.status.code(), Some(2));
    let o = qkdbound(&["bounds", "--eps", "-10", "--key-bits", "8", "--delta", "-1", "--p-correct", "-1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("pa_guess_bound,-0.41503749927884"), "{}", stdout(&o));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(qkdbound(&["bogus"]).status.code(), Some(2));
    assert_eq!(qkdbound(&["bounds", "--eps", "-50", "--key-bits", "8", "--nope"]).status.code(), Some(2));
    assert_eq!(qkdbound(&["bounds", "--eps", "3", "--key-bits", "8"]).status.code(), Some(2));
    assert_eq!(qkdbound(&["keyrate", "--sifted-len", "1e6", "--q-step", "0"]).status.code(), Some(2));
    assert_eq!(qkdbound(&["simulate", "--flip", "1.5"]).status.code(), Some(2));
    assert_eq!(qkdbound(&["simulate", "--code", "/no/such/code"]).status.code(), Some(2));
}

#[test]
fn keyrate_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rates.csv");
    let p = path.to_str().unwrap();
    let o = qkdbound(&["keyrate", "--sifted-len", "1e5", "--sifted-len", "1e6", "--model", "yuen", "--out", p]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let bytes = fs::read(&path).unwrap();
    let rows = read_csv(bytes.as_slice()).unwrap();
    assert_eq!(rows.len(), 2 * 61);
    assert!(rows.iter().all(|r| r.model == "yuen" && r.xi.is_none()));
    let mut again = Vec::new();
    qkdbound::rates::write_csv(&mut again, &rows).unwrap();
    assert_eq!(again, bytes);
}

#[test]
fn keyrate_single_point_grid() {
    let o = qkdbound(&["keyrate", "--sifted-len", "1000000", "--q-max", "0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn failed_keyrate_leaves_no_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rates.csv");
    let o = qkdbound(&["keyrate", "--sifted-len", "1e6", "--q-step", "-1", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!path.exists());
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn gnuplot_script_names_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let gp = dir.path().join("r.gp");
    let o = qkdbound(&[
        "keyrate",
        "--sifted-len",
        "1e6",
        "--out",
        csv.to_str().unwrap(),
        "--gnuplot",
        gp.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(fs::read_to_string(&gp).unwrap().contains("r.csv"));
    assert_eq!(qkdbound(&["keyrate", "--sifted-len", "1e6", "--gnuplot", "x.gp"]).status.code(), Some(2));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = qkdbound(&["simulate", "--pulses", "5000", "--flip", "0.01", "--seed", "9", "--transcript", p.to_str().unwrap()]);
        assert!(matches!(o.status.code(), Some(0) | Some(4)));
    }
    let bytes = fs::read(&a).unwrap();
    assert_eq!(bytes, fs::read(&b).unwrap());
    let t: SessionTranscript = serde_json::from_slice(&bytes).unwrap();
    assert_eq!(t.schema_version, 1);
    assert_eq!(t.config.rng_seed, 9);
}

#[test]
fn simulate_exit_codes_follow_status() {
    let o = qkdbound(&["simulate", "--pulses", "10000", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("status=completed "));
    let o = qkdbound(&["simulate", "--pulses", "10000", "--intercept", "1"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).starts_with("status=aborted_qber "));
    // Hamming(7,4) cannot absorb 3% errors over thousands of blocks
    let o = qkdbound(&["simulate", "--pulses", "1e5", "--flip", "0.03", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn simulate_reads_code_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h7.txt");
    fs::write(&path, qkdbound::LinearCodeSpec::hamming_7_4().to_text()).unwrap();
    let o = qkdbound(&["simulate", "--pulses", "4000", "--code", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn verify_suites_pass() {
    let o = qkdbound(&["verify", "--suite", "all", "--trials", "100", "--seed", "5"]);
    assert!(o.status.success(), "{}", stdout(&o));
    let out = stdout(&o);
    assert!(out.contains("[mathcore]") && out.contains("[qstate]") && out.contains("[postproc]"));
    assert!(!out.contains("FAIL"));
}

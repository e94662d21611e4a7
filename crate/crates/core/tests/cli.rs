use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use adclear::report;

fn adclear(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_adclear"));
    cmd.args(args).env_remove("ADCLEAR_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

const SMALL_SWEEP: &str =
    r#"{"seed": 3, "instances": 60, "m_values": [1, 4, 9], "supply": {"total": 1}}"#;
const EXAMPLE_ONE: &str = r#"{"supply": {"total": 1}, "advertisers": [{"v": 1, "B": 2, "rho": 1}, {"v": 4, "B": 2, "rho": 0}]}"#;

#[test]
fn empty_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "empty.json", "");
    let out = adclear(&["sweep", "--config", &path], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("missing required key: supply"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn unknown_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "bad.json",
        r#"{"supply": {"total": 1}, "sede": 4}"#,
    );
    let out = adclear(&["sweep", "--config", &path], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown key: sede"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(adclear(&["bogus"], &[]).status.code(), Some(1));
    assert_eq!(adclear(&[], &[]).status.code(), Some(1));
    assert_eq!(adclear(&["--help"], &[]).status.code(), Some(0));
    let out = adclear(&["verify", "--trials", "0"], &[]);
    assert_eq!(out.status.code(), Some(1));
    let out = adclear(&["sweep"], &[("ADCLEAR_THREADS", "zero")]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn monopoly_and_duopoly_on_an_instance() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "ex1.json", EXAMPLE_ONE);

    let out = adclear(&["monopoly", "--config", &path], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "id,v,B,q,price\n0,1,2,0,2\n1,4,2,1,2\n");

    let out = adclear(&["duopoly", "--config", &path], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert_eq!(
        text.lines().nth(1).unwrap(),
        "4,1,0.25,pure_ne,2,0.5,0,2.5,"
    );

    let out = adclear(&["duopoly", "--config", &path, "--format", "json"], &[]);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["verified"], true);
    assert_eq!(doc["metrics"]["r1"], 2.0);
}

#[test]
fn instance_commands_need_an_instance_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(dir.path(), "scenario.json", SMALL_SWEEP);
    let out = adclear(&["monopoly", "--config", &path], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(adclear(&["monopoly"], &[]).status.code(), Some(1));
}

#[test]
fn exante_and_hotelling_flags() {
    let out = adclear(
        &[
            "exante",
            "--advertisers",
            "10",
            "--expected-budget",
            "4",
            "--lo",
            "18",
            "--hi",
            "20",
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "price,regime\n19.047619,interior\n");

    let out = adclear(&["hotelling", "--zeta", "1", "--q", "0.3"], &[]);
    assert_eq!(stdout(&out), "n1,n2,S1,S2\n0.5,0.5,0.5,0.5\n");

    let out = adclear(&["hotelling", "--zeta", "1.5", "--q", "0.3"], &[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_csv_and_json_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SMALL_SWEEP);
    let csv_path = dir.path().join("out.csv").display().to_string();
    let json_path = dir.path().join("out.json").display().to_string();

    let out = adclear(&["sweep", "--config", &cfg, "--out", &csv_path], &[]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv_text = fs::read_to_string(&csv_path).unwrap();
    assert_eq!(
        csv_text.lines().next().unwrap(),
        "m,p1,p2,pM,R1,R2,R_duo,R_mono,UA_duo,UA_mono,UA_brand_duo,UA_brand_mono,SW_duo,SW_mono,split_rate"
    );
    assert_eq!(csv_text.lines().count(), 4);

    let out = adclear(
        &[
            "sweep", "--config", &cfg, "--out", &json_path, "--format", "json",
        ],
        &[],
    );
    assert!(out.status.success());
    let from_json = report::parse_json(&fs::read_to_string(&json_path).unwrap()).unwrap();
    let from_csv = report::parse_csv(&csv_text).unwrap();
    assert_eq!(from_json.len(), 3);
    for (j, c) in from_json.iter().zip(&from_csv) {
        assert_eq!(j.m, c.m);
        assert!((j.r_mono - c.r_mono).abs() <= 1e-7 * j.r_mono.abs().max(1.0));
        assert!((j.split_rate - c.split_rate).abs() <= 1e-9);
    }
}

#[test]
fn seed_flag_overrides_and_threads_do_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SMALL_SWEEP);
    let base = adclear(&["sweep", "--config", &cfg], &[("ADCLEAR_THREADS", "1")]);
    let threaded = adclear(&["sweep", "--config", &cfg], &[("ADCLEAR_THREADS", "4")]);
    assert!(base.status.success());
    assert_eq!(base.stdout, threaded.stdout);

    let explicit = adclear(&["sweep", "--config", &cfg, "--seed", "3"], &[]);
    assert_eq!(base.stdout, explicit.stdout);
    let reseeded = adclear(&["sweep", "--config", &cfg, "--seed", "4"], &[]);
    assert_ne!(base.stdout, reseeded.stdout);
}

#[test]
fn verify_reports_every_property() {
    let out = adclear(
        &[
            "verify", "--trials", "150", "--seed", "11", "--format", "json",
        ],
        &[],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let props = doc["properties"].as_array().unwrap();
    assert!(props.len() >= 10);
    assert!(props.iter().all(|p| p["violations"] == 0));

    let again = adclear(
        &[
            "verify", "--trials", "150", "--seed", "11", "--format", "json",
        ],
        &[],
    );
    assert_eq!(out.stdout, again.stdout);
}

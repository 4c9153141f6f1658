use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lifespan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lifespan")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn bounds_prints_labeled_table() {
    let out =
        lifespan(&["bounds", "--p", "2", "--a", "1", "--eps", "0.1", "--family", "g-positive", "--R", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("eps_threshold"));
    assert!(text.contains("3.150000e2"));
    assert!(text.contains("t0_upper"));
}

#[test]
fn bounds_accepts_amplitudes_and_negative_a() {
    let out = lifespan(&[
        "bounds",
        "--p",
        "3",
        "--a",
        "-1",
        "--eps",
        "0.1",
        "--family",
        "f-positive-g-zero",
        "--R",
        "1",
        "--amp_f",
        "2",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("Cf"));
}

#[test]
fn solve_reproduces_anchor() {
    let out = lifespan(&[
        "solve",
        "--p",
        "2",
        "--a",
        "1",
        "--eps",
        "0.5",
        "--family",
        "g-positive",
        "--R",
        "1",
        "--h",
        "0.00390625",
        "--tmax",
        "20",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("status=BlewUp"), "{text}");
    assert!(text.contains("t_blow=9.6953125"), "{text}");
}

#[test]
fn solve_dump_writes_snapshots_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.txt");
    let out = lifespan(&[
        "solve",
        "--p",
        "2",
        "--a",
        "0",
        "--eps",
        "0.1",
        "--family",
        "g-zero-odd",
        "--R",
        "1",
        "--h",
        "0.125",
        "--tmax",
        "4",
        "--dump",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("status=SurvivedToTmax"));
    let snap = fs::read_to_string(&path).unwrap();
    assert!(snap.lines().all(|l| l.split(' ').count() == 3));
    let series = fs::read_to_string(dir.path().join("run.txt.series.csv")).unwrap();
    assert!(series.starts_with("t,max_abs_u\n"));
    // Header plus levels 0..=32.
    assert_eq!(series.lines().count(), 1 + 33);
}

fn write_config(dir: &Path, name: &str) -> std::path::PathBuf {
    let cfg = format!(
        r#"{{"p": 2, "a": 1, "family": "g-positive", "R": 1, "amp_f": 0, "amp_g": 0.02,
            "eps_list": [0.4, 0.2, 0.1, 0.05, 0.025], "h_list": [0.5, 0.25],
            "out_csv": "{0}/{name}.csv", "out_json": "{0}/{name}.json"}}"#,
        dir.display()
    );
    let path = dir.join(format!("{name}.cfg.json"));
    fs::write(&path, cfg).unwrap();
    path
}

#[test]
fn sweep_writes_reports_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run");
    let read = |f: &str| fs::read(dir.path().join(f)).unwrap();
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = lifespan(&["sweep", "--config", cfg.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(stdout(&out).contains("verdict=pass"));
        outputs.push((read("run.csv"), read("run.json")));
    }
    assert!(outputs[0] == outputs[1], "reports differ between reruns");
    assert_eq!(String::from_utf8(outputs[0].0.clone()).unwrap().lines().count(), 1 + 5 + 1);
}

#[test]
fn sweep_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"p": 2, "a": 1, "family": "g-positive", "R": 1, "amp_f": 0, "amp_g": 1,
        "eps_list": [0.1], "h_list": [0.5, 0.25], "colour": 1}"#,
    )
    .unwrap();
    let out = lifespan(&["sweep", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_reports_pass() {
    for args in [
        vec!["verify", "--which", "holder", "--trials", "200"],
        vec!["verify", "--which", "huygens", "--family", "g-zero-odd"],
        vec!["verify", "--which", "picard"],
        vec!["verify", "--which", "apriori-i", "--a", "-1", "--tmax", "10", "--samples", "16"],
    ] {
        let out = lifespan(&args);
        assert!(out.status.success(), "{args:?}: {}", stdout(&out));
        assert!(stdout(&out).starts_with("PASS"));
    }
}

#[test]
fn huygens_on_nonzero_integral_is_an_error() {
    let out = lifespan(&["verify", "--which", "huygens", "--family", "g-positive"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn unknown_family_is_rejected() {
    let out =
        lifespan(&["bounds", "--p", "2", "--a", "1", "--eps", "0.1", "--family", "gaussian", "--R", "1"]);
    assert!(!out.status.success());
}

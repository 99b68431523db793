//! End-to-end tests of the command-line interface and its file
//! formats, driving the real binary.

use std::path::Path;
use std::process::{Command, Output};

use infoconf::calibration::CalibrationTable;

fn infoconf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_infoconf"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const FIXTURE_CSV: &str = "\
sample_id,true_label,classifier_id,rank,label,confidence
s1,a,c,1,a,0.2
s2,b,c,1,c,0.4
s3,b,c,1,b,0.6
s4,a,c,1,a,0.8
";

#[test]
fn calibrate_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("eval.csv"), FIXTURE_CSV).unwrap();
    let out = infoconf(
        &[
            "calibrate",
            "eval.csv",
            "--classifier",
            "c",
            "--binning",
            "distinct",
            "--output",
            "table.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("R=0.750000"));
    assert!(stdout(&out).contains("entries=4"));

    let table =
        CalibrationTable::from_json(&std::fs::read_to_string(dir.path().join("table.json")).unwrap())
            .unwrap();
    assert_eq!(table.r, 0.75);
    let p_hat: Vec<f64> = table.entries.iter().map(|e| e.p_hat).collect();
    assert_eq!(p_hat, vec![0.25, 0.25, 0.5, 0.75]);
    // New confidences are monotone in the cumulative performance.
    assert!(table.entries.windows(2).all(|w| w[0].k_new <= w[1].k_new));
}

#[test]
fn calibrate_missing_input_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = infoconf(
        &["calibrate", "nope.csv", "--classifier", "c", "-o", "t.json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("input not found"));
}

#[test]
fn calibrate_degenerate_rate_is_a_policy_error() {
    let dir = tempfile::tempdir().unwrap();
    // Every decision correct: R = 1, degenerate without the override.
    let csv = "sample_id,true_label,classifier_id,rank,label,confidence\n\
               s1,a,c,1,a,0.2\ns2,b,c,1,b,0.6\n";
    std::fs::write(dir.path().join("eval.csv"), csv).unwrap();
    let args = ["calibrate", "eval.csv", "--classifier", "c", "-o", "t.json"];
    let out = infoconf(&args, dir.path());
    assert_eq!(out.status.code(), Some(3));

    let mut with_override = args.to_vec();
    with_override.push("--allow-degenerate");
    let out = infoconf(&with_override, dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn json_errors_flag_emits_structured_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = infoconf(
        &[
            "calibrate",
            "nope.csv",
            "--classifier",
            "c",
            "-o",
            "t.json",
            "--json-errors",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_str(stderr(&out).trim()).unwrap();
    assert_eq!(err["code"], 2);
    assert!(err["error"].as_str().unwrap().contains("input not found"));
}

#[test]
fn fuse_reports_requested_rules_and_missing_tables() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("eval.csv"), FIXTURE_CSV).unwrap();
    let out = infoconf(
        &[
            "fuse",
            "eval.csv",
            "--rules",
            "sum,max,product",
            "--n-max",
            "1",
            "--report",
            "report.json",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    for rule in ["sum", "max", "product"] {
        assert!(report["combined"].get(rule).is_some(), "missing {rule}");
    }

    // Calibrated fusion without a table for classifier "c" names it.
    let out = infoconf(&["fuse", "eval.csv", "--calibrated"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains('c'), "{}", stderr(&out));
}

#[test]
fn simulate_is_deterministic_and_validates_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "simulate", "--samples", "600", "--classes", "8", "-o", "run1", "--quiet",
    ];
    assert!(infoconf(&args, dir.path()).status.success());
    let mut args2 = args;
    args2[6] = "run2";
    assert!(infoconf(&args2, dir.path()).status.success());
    let load = |name: &str| -> serde_json::Value {
        serde_json::from_str(&std::fs::read_to_string(dir.path().join(name)).unwrap()).unwrap()
    };
    let (r1, r2) = (load("run1/report.json"), load("run2/report.json"));
    // Everything but the wall-clock stage timings must be identical.
    assert_eq!(r1["report"], r2["report"]);
    assert_eq!(r1["tables"], r2["tables"]);
    assert_eq!(r1["seed"], r2["seed"]);

    let out = infoconf(
        &[
            "simulate", "--samples", "600", "--classes", "8", "--correlation", "1.5", "-o", "bad",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("[0, 1]"), "{}", stderr(&out));
}

#[test]
fn single_classifier_simulation_fuses_to_itself() {
    let dir = tempfile::tempdir().unwrap();
    let out = infoconf(
        &[
            "simulate", "--classifiers", "1", "--samples", "600", "--classes", "8", "-o", "solo",
            "--quiet",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("solo/report.json")).unwrap())
            .unwrap();
    let individual = report["report"]["individual"]["alpha"]["top1"].as_f64().unwrap();
    for rule in ["sum", "max", "product"] {
        let raw = report["report"]["combined"][rule]["raw"].as_f64().unwrap();
        assert_eq!(raw, individual, "{rule}");
    }
}

fn read_plot_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn plot_sigmoid_crosses_half_at_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = infoconf(&["plot", "sigmoid", "-o", "sig.csv", "--quiet"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = read_plot_csv(&dir.path().join("sig.csv"));
    assert_eq!(header[0], "k");
    let zero_row = rows.iter().find(|r| r[0] == 0.0).expect("grid contains K = 0");
    for value in &zero_row[1..] {
        assert_eq!(*value, 0.5);
    }
}

#[test]
fn plot_distribution_converges_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = infoconf(
        &[
            "plot", "exp-distribution", "--lambdas", "10", "--x-max", "2", "-o", "dist.csv",
            "--quiet",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let (_, rows) = read_plot_csv(&dir.path().join("dist.csv"));
    let last = rows.last().unwrap();
    assert!(last[1] > 0.999);
    assert!(rows.windows(2).all(|w| w[0][1] <= w[1][1]));
}

#[test]
fn plot_rejects_unknown_figure() {
    let dir = tempfile::tempdir().unwrap();
    let out = infoconf(&["plot", "heatmap", "-o", "x.csv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("possible values"));
}

#[test]
fn goldencheck_passes_and_fails_on_impossible_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = infoconf(&["goldencheck"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("0.6180339887"));
    assert!(stdout(&out).contains("0.5857864376"));
    for line in stdout(&out).lines().filter(|l| l.starts_with("ok ")) {
        assert!(line.contains("lhs=") && line.contains("rhs=") && line.contains("|diff|="));
    }

    let out = infoconf(&["goldencheck", "--tol", "1e-30"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

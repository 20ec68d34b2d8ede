//! End-to-end tests of the binary: exit codes, determinism, output shapes.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_inar-gof"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_demo_series(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("demo.txt");
    let out = run(&[
        "simulate",
        "--dgp",
        "poi-inar1:lambda=1,alpha=0.5",
        "--n",
        "120",
        "--seed",
        "7",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    path
}

#[test]
fn simulate_twice_gives_byte_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for path in [&a, &b] {
        let out = run(&[
            "simulate",
            "--dgp",
            "poi-inar1:lambda=1,alpha=0.5",
            "--n",
            "5",
            "--seed",
            "7",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn test_json_embeds_enough_to_reproduce_itself() {
    let dir = tempfile::tempdir().unwrap();
    let series = write_demo_series(dir.path());
    let args = [
        "test",
        series.to_str().unwrap(),
        "--bootstrap",
        "49",
        "--seed",
        "11",
        "--stream",
        "3",
        "--json",
    ];
    let first = run(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&first)).unwrap();

    // Re-run with the flags recovered from the document.
    let rerun = run(&[
        "test",
        series.to_str().unwrap(),
        "--order",
        &doc["p"].to_string(),
        "--stat-order",
        &doc["s"].to_string(),
        "--weight",
        &doc["a"].to_string(),
        "--bootstrap",
        &doc["B"].to_string(),
        "--burnin",
        &doc["r"].to_string(),
        "--seed",
        &doc["seed"]["seed"].to_string(),
        "--stream",
        &doc["seed"]["stream"].to_string(),
        "--method",
        doc["method"].as_str().unwrap(),
        "--json",
    ]);
    assert!(rerun.status.success(), "{}", stderr(&rerun));
    let again: serde_json::Value = serde_json::from_str(&stdout(&rerun)).unwrap();
    assert_eq!(doc["statistic"], again["statistic"]);
    assert_eq!(doc["p_value"], again["p_value"]);
    assert_eq!(doc["alphas"], again["alphas"]);
}

#[test]
fn thread_count_never_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let series = write_demo_series(dir.path());
    let args =
        ["test", series.to_str().unwrap(), "--bootstrap", "39", "--seed", "5", "--json"];
    let single = bin().args(args).args(["--threads", "1"]).output().unwrap();
    let multi = bin().args(args).env("INAR_GOF_THREADS", "4").output().unwrap();
    assert!(single.status.success() && multi.status.success());
    assert_eq!(single.stdout, multi.stdout);
}

#[test]
fn malformed_line_is_named_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "1\n2\nx\n").unwrap();
    let out = run(&["test", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "stderr: {}", stderr(&out));
}

#[test]
fn constant_series_summary_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("const.txt");
    std::fs::write(&path, "4\n4\n4\n4\n4\n4\n").unwrap();
    let out = run(&["summary", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("degenerate"), "stderr: {}", stderr(&out));
}

#[test]
fn unknown_dgp_and_bad_parameters_exit_2() {
    let out = run(&["simulate", "--dgp", "martian:x=1", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["simulate", "--dgp", "poi-inar1:lambda=1,alpha=1.4", "--n", "10"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["experiment", "--preset", "tableX"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn failed_runs_leave_no_partial_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "1\n2\nx\n").unwrap();
    let target = dir.path().join("report.json");
    let out = run(&[
        "test",
        bad.to_str().unwrap(),
        "--json",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!target.exists(), "partial output written on error");
}

#[test]
fn heatmap_covers_the_unit_square_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let series = write_demo_series(dir.path());
    let out = run(&["heatmap", series.to_str().unwrap(), "--grid", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "u0,u1,value");
    assert_eq!(lines.len(), 1 + 16);
    for line in &lines[1..] {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert!((0.0..=1.0).contains(&fields[0]) && (0.0..=1.0).contains(&fields[1]));
        assert!(fields[2] >= 0.0);
    }
    let out = run(&["heatmap", series.to_str().unwrap(), "--order", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_preset_writes_the_full_grid_and_is_reproducible_modulo_timing() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = run(&[
            "experiment",
            "--preset",
            "table1",
            "--scale",
            "50",
            "--seed",
            "3",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
    }
    let read = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            // The trailing column is wall-clock seconds; everything else
            // must reproduce exactly.
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    let rows_a = read(&a);
    assert_eq!(rows_a.len(), 1 + 24, "header plus 24 cells");
    assert_eq!(rows_a, read(&b));
}

#[test]
fn experiment_spec_file_runs_custom_cells() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("cells.json");
    std::fs::write(
        &spec,
        r#"[{
            "label": "poi-inar1",
            "params": "lambda=1,alpha=0.5",
            "dgp": {
                "variant": { "InarP": { "model": {
                    "alphas": [0.5],
                    "innovations": [0.5, 0.25, 0.125, 0.0625, 0.0625]
                } } },
                "burn_in": 100
            },
            "n": 60,
            "p": 1,
            "s": 1,
            "a": 2.0,
            "m": 50,
            "gamma": 0.05,
            "method": "WarpSpeed",
            "r": 50,
            "seed": { "seed": 9, "stream": 0 }
        }]"#,
    )
    .unwrap();
    let out = run(&["experiment", "--spec", spec.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("dgp,params,n,p,s,a,M,method,rejection_rate,excluded,seconds"));
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains("poi-inar1"));
}

#[test]
fn bundled_rig_demo_is_not_rejected_at_five_percent() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/demo/rig_counts.txt");
    let out = run(&[
        "test", path, "--weight", "5", "--bootstrap", "1000", "--seed", "2", "--json",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(doc["p_value"].as_f64().unwrap() > 0.05);
}

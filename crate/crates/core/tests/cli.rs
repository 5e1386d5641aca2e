use std::path::Path;
use std::process::{Command, Output};

use robust_regress::io::{read_instance, read_truth};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robust-regress"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn golden(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn gen_then_fit_recovers_noiseless_truth() {
    let dir = tempfile::tempdir().unwrap();
    let (data, truth, report) = (
        dir.path().join("a.csv"),
        dir.path().join("t.csv"),
        dir.path().join("r.json"),
    );
    let out = run(&[
        "gen",
        "--n",
        "4",
        "--d",
        "1",
        "--alpha",
        "1",
        "--noise",
        "spike:0",
        "--seed",
        "3",
        "--out",
        p(&data),
        "--truth-out",
        p(&truth),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[
        "fit",
        "--in",
        p(&data),
        "--estimator",
        "huber",
        "--truth",
        p(&truth),
        "--out",
        p(&report),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["estimator"], "huber");
    assert!(v["err_param"].as_f64().unwrap() <= 1e-10, "{v}");
    assert!(v["converged"].as_bool().unwrap());

    let inst = read_instance(&data).unwrap();
    let t = read_truth(&truth).unwrap();
    assert_eq!(inst.n(), 4);
    assert_eq!(t.eta.iter().filter(|e| **e != 0.0).count(), 0);
    let text = std::fs::read_to_string(&data).unwrap();
    assert!(text.starts_with("y,x1\n"));
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let (data, truth) = (dir.path().join("a.csv"), dir.path().join("t.csv"));
    let out = run(&[
        "gen",
        "--n",
        "50",
        "--d",
        "3",
        "--alpha",
        "0.3",
        "--noise",
        "gauss:100",
        "--seed",
        "9",
        "--out",
        p(&data),
        "--truth-out",
        p(&truth),
    ]);
    assert!(out.status.success());
    let inst = read_instance(&data).unwrap();
    let again = dir.path().join("b.csv");
    robust_regress::io::write_instance(&again, &inst).unwrap();
    assert_eq!(std::fs::read(&data).unwrap(), std::fs::read(&again).unwrap());
    let t = read_truth(&truth).unwrap();
    let inst = inst.with_truth(t).unwrap();
    let resid = inst.y() - inst.x() * &inst.truth().unwrap().beta_star;
    for (r, e) in resid.iter().zip(inst.truth().unwrap().eta.iter()) {
        assert!((r - e).abs() <= 1e-9 * (1.0 + e.abs()));
    }
}

#[test]
fn bootstrap_needs_explicit_or_auto_delta() {
    let dir = tempfile::tempdir().unwrap();
    let (data, truth, report) = (
        dir.path().join("a.csv"),
        dir.path().join("t.csv"),
        dir.path().join("r.json"),
    );
    assert!(run(&[
        "gen",
        "--n",
        "4000",
        "--d",
        "3",
        "--alpha",
        "0.5",
        "--noise",
        "spike:1e4",
        "--out",
        p(&data),
        "--truth-out",
        p(&truth),
    ])
    .status
    .success());
    let out = run(&[
        "fit",
        "--in",
        p(&data),
        "--estimator",
        "median-boot",
        "--out",
        p(&report),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--delta"));
    let out = run(&[
        "fit",
        "--in",
        p(&data),
        "--estimator",
        "median-boot",
        "--delta",
        "auto",
        "--truth",
        p(&truth),
        "--out",
        p(&report),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(v["delta"].as_f64().unwrap() >= 3.0);
    assert_eq!(v["estimator"], "median_bootstrap");
    assert!(v["err_param"].as_f64().unwrap() < 1.0, "{v}");
}

#[test]
fn bad_header_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("a.csv");
    std::fs::write(&data, "y,x1,x3\n1,2,3\n").unwrap();
    let out = run(&["fit", "--in", p(&data), "--out", p(&dir.path().join("r.json"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.starts_with("error: parse: "), "{err}");
    assert!(!dir.path().join("r.json").exists());
}

#[test]
fn estimation_failure_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("small.csv");
    // Every |x| is below the 0.5 magnitude cutoff, so no ratio survives the filter.
    std::fs::write(&data, "y,x1\n0.1,0.1\n-0.2,0.2\n0.3,-0.3\n").unwrap();
    let out = run(&[
        "fit",
        "--in",
        p(&data),
        "--estimator",
        "median",
        "--out",
        p(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn usage_errors_exit_one() {
    let out = run(&["fit", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: usage: "));
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&[
        "gen", "--n", "ten", "--d", "1", "--alpha", "1", "--noise", "spike:0", "--out", "x",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_matches_golden_files() {
    let cases = [
        (vec!["--help"], "help.txt"),
        (vec!["gen", "--help"], "help_gen.txt"),
        (vec!["fit", "--help"], "help_fit.txt"),
        (vec!["bench", "--help"], "help_bench.txt"),
        (vec!["spread-check", "--help"], "help_spread-check.txt"),
    ];
    for (args, file) in cases {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(String::from_utf8(out.stdout).unwrap(), golden(file), "{file}");
    }
}

#[test]
fn bench_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.conf");
    std::fs::write(
        &config,
        "# small grid\nn = 200, 400, 800\nd = 2\nalpha = 0.5\nnoise = spike:1e4\nestimator = huber, median_bootstrap\ntrials = 3\nseed = 4\n",
    )
    .unwrap();
    let mut runs = Vec::new();
    for i in 0..2 {
        let out_dir = dir.path().join(format!("o{i}"));
        let out = run(&["bench", "--config", p(&config), "--out", p(&out_dir)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let files: Vec<Vec<u8>> = ["records.jsonl", "aggregate.csv", "scaling.csv"]
            .iter()
            .map(|f| std::fs::read(out_dir.join(f)).unwrap())
            .collect();
        runs.push(files);
    }
    assert_eq!(runs[0], runs[1]);
    let records = String::from_utf8(runs[0][0].clone()).unwrap();
    assert_eq!(records.lines().count(), 3 * 3 * 2);
    for line in records.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["runtime_ms"].is_null());
    }
}

#[test]
fn spread_check_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let (data, report) = (dir.path().join("a.csv"), dir.path().join("s.json"));
    assert!(run(&[
        "gen",
        "--n",
        "100",
        "--d",
        "3",
        "--alpha",
        "1",
        "--noise",
        "spike:0",
        "--out",
        p(&data)
    ])
    .status
    .success());
    let out = run(&[
        "spread-check",
        "--in",
        p(&data),
        "--m",
        "10",
        "--restarts",
        "4",
        "--out",
        p(&report),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["method"], "randomized_search");
    let rho = v["rho_lower_witnessed"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&rho));
    assert_eq!(v["witness_set"].as_array().unwrap().len(), 10);
}

use std::fs;
use std::path::Path;
use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_feeder-ems");

fn run(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn stochastic_study_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        let o = run(&[
            "--mode", "stoch", "--objective", "multi", "--scenarios", "4,6", "--repeats", "2",
            "--population", "6", "--iterations", "3", "--seed", "9", "--out", out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (mut fa, mut fb) = (read_all(&a), read_all(&b));
    // report.json echoes the output directory; everything else must match byte for byte
    for files in [&mut fa, &mut fb] {
        let report = files.iter_mut().find(|f| f.0 == "report.json").unwrap();
        let mut v: serde_json::Value = serde_json::from_slice(&report.1).unwrap();
        v["config"]["out"] = serde_json::Value::Null;
        report.1 = serde_json::to_vec(&v).unwrap();
    }
    assert_eq!(fa, fb);
    let names: Vec<&str> = fa.iter().map(|f| f.0.as_str()).collect();
    for want in [
        "pareto_front.csv", "schedules_cost.csv", "schedules_ens.csv", "schedules_bcs.csv", "stats.csv",
        "histogram_f1.csv", "histogram_f2.csv", "profit.csv", "manifest.json",
    ] {
        assert!(names.contains(&want), "missing {want}");
    }

    let report: serde_json::Value = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    let runs: usize = report["settings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["repeats"].as_array().unwrap().len())
        .sum();
    assert_eq!(runs, 4);

    let stats = fs::read_to_string(a.join("stats.csv")).unwrap();
    for line in stats.lines().skip(1) {
        let c: Vec<f64> = line.split(',').skip(3).map(|v| v.parse().unwrap()).collect();
        let (n, mean, sd, ci, re) = (c[0], c[1], c[2], c[3], c[5]);
        assert!((ci - 1.96 * sd / n.sqrt()).abs() <= 1e-9 * ci.max(1.0));
        assert!((re - ci / mean.abs()).abs() <= 1e-12);
    }

    let profit = fs::read_to_string(a.join("profit.csv")).unwrap();
    let cumulative: Vec<f64> = profit
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert_eq!(cumulative.len(), 20);
    assert!(cumulative.windows(2).all(|w| w[1] >= w[0]) || cumulative.windows(2).all(|w| w[1] <= w[0]));

    let hist = fs::read_to_string(a.join("histogram_f1.csv")).unwrap();
    let area: f64 = hist
        .lines()
        .skip(1)
        .map(|l| {
            let c: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (c[1] - c[0]) * c[2]
        })
        .sum();
    assert!((area - 1.0).abs() < 1e-9);
}

#[test]
fn deterministic_report_has_one_certain_scenario() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "--mode", "det", "--objective", "cost", "--repeats", "1", "--population", "4", "--iterations", "2",
        "--out", tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("report.json")).unwrap()).unwrap();
    let scenarios = report["scenarios"]["scenarios"].as_array().unwrap();
    assert_eq!(scenarios.len(), 1);
    assert_eq!(scenarios[0]["probability"].as_f64(), Some(1.0));
    assert!(tmp.path().join("schedules_cost.csv").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(run(&["--repeats", "0", "--out", out]).status.code(), Some(1));
    assert_eq!(run(&["--network", "/no/such/file.json", "--out", out]).status.code(), Some(1));
    assert_eq!(run(&["--weights", "1,2,3", "--out", out]).status.code(), Some(1));
    assert_eq!(run(&["--mode", "sideways"]).status.code(), Some(1));
    let cfg = tmp.path().join("bad.json");
    fs::write(&cfg, r#"{"repeats": 2, "unknown_field": true}"#).unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn config_file_is_used() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("study.json");
    let out = tmp.path().join("out");
    fs::write(
        &cfg,
        format!(
            r#"{{"mode": "det", "objective": "ens", "repeats": 1,
                "optimizer": {{"population": 4, "iterations": 2}},
                "out": "{}"}}"#,
            out.display()
        ),
    )
    .unwrap();
    let o = run(&["--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("schedules_ens.csv").exists());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.as_array().unwrap().iter().any(|e| e["file"] == "pareto_front.csv"));
}

use std::path::Path;
use std::process::{Command, Output};

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_calibound"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn bounds_reproduce_table_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &["bounds", "recalib-holdout", "--bins", "15", "--n-re", "100"],
    );
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.8475).abs() < 5e-4);
    assert!(dir.path().join("bounds.record.json").exists());

    let o = run(
        dir.path(),
        &[
            "bounds",
            "recalib-reuse",
            "--bins",
            "27",
            "--n",
            "20000",
            "--i1",
            "0",
            "--i2",
            "0",
        ],
    );
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.0865).abs() < 1e-4);
}

#[test]
fn usage_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "bounds", "gen-ece", "--ecmi", "-1", "--bins", "15", "--n", "4000",
        ],
    );
    assert_eq!(o.status.code(), Some(2));

    let missing = dir.path().join("missing.csv");
    let o = run(dir.path(), &["ece", "--input", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("missing.csv"));

    let o = run(dir.path(), &["bounds", "no-such-bound"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ece_prints_value_and_resolves_auto_bins() {
    let dir = tempfile::tempdir().unwrap();
    let small = dir.path().join("three.csv");
    std::fs::write(&small, "0.3,0\n0.3,0\n0.3,1\n").unwrap();
    let o = run(
        dir.path(),
        &["ece", "--input", small.to_str().unwrap(), "--bins", "1"],
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("0.03333"));

    let big = dir.path().join("big.csv");
    let body: String = (0..4000)
        .map(|i| format!("{},{}\n", (i as f64 + 0.5) / 4000.0, i % 2))
        .collect();
    std::fs::write(&big, body).unwrap();
    let o = run(
        dir.path(),
        &[
            "ece",
            "--input",
            big.to_str().unwrap(),
            "--bins",
            "auto",
            "--lipschitz",
            "1",
        ],
    );
    assert!(stdout(&o)
        .lines()
        .any(|l| l.split_whitespace().collect::<Vec<_>>() == ["bins", "35"]));
}

#[test]
fn recalibrate_reports_holdout_bound_and_rejects_small_test_split() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "recalibrate",
            "--bins",
            "15",
            "--variant",
            "holdout",
            "--n-re",
            "100",
        ],
    );
    assert!(o.status.success());
    assert!(stdout(&o).contains("0.8475"));

    let o = run(
        dir.path(),
        &["recalibrate", "--bins", "15", "--variant", "reuse"],
    );
    let reuse: f64 = stdout(&o)
        .lines()
        .find_map(|l| l.strip_prefix("bound"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!(reuse < 0.8475);

    let file = dir.path().join("scores.csv");
    let body: String = (0..100)
        .map(|i| format!("{},{}\n", i as f64 / 100.0, i % 2))
        .collect();
    std::fs::write(&file, body).unwrap();
    let o = run(
        dir.path(),
        &[
            "recalibrate",
            "--input",
            file.to_str().unwrap(),
            "--bins",
            "15",
            "--variant",
            "reuse",
            "--eval-split",
            "0.1",
        ],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "synthetic",
        "--n-grid",
        "500,1000",
        "--reps",
        "3",
        "--n-mc",
        "100000",
        "--seed",
        "5",
    ];
    assert!(run(a.path(), &args).status.success());
    assert!(run(b.path(), &args).status.success());
    for f in ["synthetic.csv", "synthetic.record.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }

    let args = [
        "cmi",
        "--n-grid",
        "60,120",
        "--n-supersamples",
        "2",
        "--seed",
        "3",
    ];
    assert!(run(a.path(), &args).status.success());
    assert!(run(b.path(), &args).status.success());
    for f in ["cmi.csv", "cmi_cells_n60.csv", "cmi.record.json"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap()
        );
    }
    let summary = std::fs::read_to_string(a.path().join("cmi.csv")).unwrap();
    assert!(summary.starts_with("n,bins,mean_gap,ecmi_est,bound\n"));
    let cells = std::fs::read_to_string(a.path().join("cmi_cells_n60.csv")).unwrap();
    assert!(cells.starts_with("supersample_idx,mask_idx,statistic_name,value\n"));
    for row in summary.lines().skip(1) {
        let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[4] >= cols[2], "bound below mean gap: {row}");
    }
}

#[test]
fn calibrated_synthetic_model_has_tiny_tce() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        dir.path(),
        &[
            "synthetic",
            "--beta0",
            "0",
            "--beta1",
            "-2",
            "--n-grid",
            "1000",
            "--reps",
            "2",
            "--n-mc",
            "200000",
        ],
    );
    assert!(o.status.success());
    let csv = std::fs::read_to_string(dir.path().join("synthetic.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let tce: f64 = row.split(',').nth(4).unwrap().parse().unwrap();
        assert!(tce < 0.005);
    }
}

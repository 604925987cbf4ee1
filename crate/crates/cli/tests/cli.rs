use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lgwitness::modes::ModeSet;
use lgwitness::states::correlated_pure_real;
use lgwitness::witness::witness_sum;
use lgwitness::VisibilityTable;
use serde_json::Value;
use tempfile::TempDir;

const EXAMPLE: &str = "0.5,0.07,0.01,0.01";

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lgwitness"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn simulate_example(dir: &TempDir, name: &str, extra: &[&str]) -> PathBuf {
    let out = path(dir, name);
    let mut args = vec![
        "simulate",
        "--amplitudes",
        EXAMPLE,
        "--flux",
        "1e6",
        "--output",
        s(&out),
    ];
    args.extend_from_slice(extra);
    ok(&args);
    out
}

fn certify_json(args: &[&str]) -> Value {
    serde_json::from_slice(&ok(args).stdout).unwrap()
}

#[test]
fn simulate_writes_72_deterministic_rows() {
    let dir = TempDir::new().unwrap();
    let a = simulate_example(&dir, "a.csv", &["--seed", "7"]);
    let b = simulate_example(&dir, "b.csv", &["--seed", "7"]);
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text.lines().next(), Some("na,la,nb,lb,basis,outcome,count"));
    assert_eq!(text.lines().count(), 73);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let c = simulate_example(&dir, "c.csv", &["--seed", "8"]);
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn expectation_mode_is_noise_free() {
    let dir = TempDir::new().unwrap();
    let a = simulate_example(&dir, "a.csv", &["--expectation", "--seed", "1"]);
    let b = simulate_example(&dir, "b.csv", &["--expectation", "--seed", "2"]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn dry_run_counts_settings_at_186_modes() {
    let out = ok(&["simulate", "--l-max", "15", "--n-max", "5", "--dry-run"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("206460 "), "{text}");
}

#[test]
fn certify_example_and_restriction() {
    let dir = TempDir::new().unwrap();
    let data = simulate_example(&dir, "ex.csv", &["--expectation"]);
    let full = certify_json(&["certify", "--input", s(&data)]);
    assert_eq!(full["certified_d"], 2);
    assert_eq!(full["D"], 4);
    assert_eq!(full["integrity_ok"], true);
    assert_eq!(full["bounds"][1], serde_json::json!([2, 10.0]));
    let sub = certify_json(&["certify", "--input", s(&data), "--modes", "0:1,0:2,0:3"]);
    assert_eq!(sub["certified_d"], 3);
    assert!((sub["W"].as_f64().unwrap() - 6.12).abs() < 0.01);
}

#[test]
fn certify_maximally_entangled() {
    let dir = TempDir::new().unwrap();
    let data = path(&dir, "max.csv");
    ok(&[
        "simulate",
        "--modes",
        "0:-1,0:0,0:1,0:2",
        "--profile",
        "uniform",
        "--flux",
        "1e8",
        "--seed",
        "3",
        "--output",
        s(&data),
    ]);
    let report = certify_json(&[
        "certify",
        "--input",
        s(&data),
        "--resamples",
        "50",
        "--seed",
        "4",
    ]);
    assert_eq!(report["certified_d"], 4);
    assert_eq!(report["n_resamples"], 50);
    // No anticorrelated counts exist to fluctuate, so every resample is perfect.
    assert_eq!(report["sigma"].as_f64(), Some(0.0));
    assert_eq!(report["W"].as_f64(), Some(18.0));
}

#[test]
fn round_trip_matches_exact_witness() {
    let exact = witness_sum(
        &VisibilityTable::from_state(
            &correlated_pure_real(&[0.5, 0.07, 0.01, 0.01], ModeSet::ladder(4)).unwrap(),
        )
        .unwrap(),
    );
    let dir = TempDir::new().unwrap();
    for format in ["csv", "json"] {
        let data = simulate_example(
            &dir,
            &format!("ex.{format}"),
            &["--expectation", "--format", format],
        );
        let w = certify_json(&["certify", "--input", s(&data)])["W"]
            .as_f64()
            .unwrap();
        assert!((w - exact).abs() < 1e-9, "{format}: {w} vs {exact}");
    }
}

#[test]
fn optimize_finds_three_mode_subset() {
    let dir = TempDir::new().unwrap();
    let data = simulate_example(&dir, "ex.csv", &["--expectation"]);
    let out: Value =
        serde_json::from_slice(&ok(&["optimize", "--input", s(&data)]).stdout).unwrap();
    assert_eq!(out["greedy"]["best_subset"], serde_json::json!([1, 2, 3]));
    assert_eq!(out["greedy"]["best_d"], 3);
    assert_eq!(out["exhaustive"]["certified_d"], 3);
    assert_eq!(out["best_modes"][0], serde_json::json!({"n": 0, "l": 1}));

    let csv = ok(&["optimize", "--amplitudes", EXAMPLE, "--format", "csv"]).stdout;
    let text = String::from_utf8(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "modes_kept,certified_d,w,removed_n,removed_l");
    assert!(lines[1].starts_with("4,2,"));
    assert!(lines[2].starts_with("3,3,"));
    assert!(lines[3].starts_with("2,2,"));
}

#[test]
fn robustness_is_deterministic_and_mostly_decreasing() {
    let dir = TempDir::new().unwrap();
    let args = |out: &Path| {
        vec![
            "robustness".to_string(),
            "--amplitudes".into(),
            EXAMPLE.into(),
            "--trials".into(),
            "1000".into(),
            "--seed".into(),
            "5".into(),
            "--output".into(),
            s(out).into(),
        ]
    };
    let a = path(&dir, "a.csv");
    let b = path(&dir, "b.csv");
    for p in [&a, &b] {
        let v = args(p);
        ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let text = fs::read_to_string(&a).unwrap();
    let rows: Vec<(String, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].to_string(), f[3].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 3000);
    for kind in ["state", "projector", "both"] {
        let ws: Vec<f64> = rows.iter().filter(|r| r.0 == kind).map(|r| r.1).collect();
        let w0 = ws[0];
        let frac = ws.iter().filter(|&&w| w <= w0).count() as f64 / ws.len() as f64;
        assert!(frac >= 0.99, "{kind}: {frac}");
    }
}

#[test]
fn report_writes_plot_data() {
    let dir = TempDir::new().unwrap();
    let data = simulate_example(&dir, "ex.csv", &["--seed", "9"]);
    let out = path(&dir, "rep");
    ok(&[
        "report",
        "--input",
        s(&data),
        "--resamples",
        "20",
        "--seed",
        "1",
        "--output",
        s(&out),
    ]);
    let per_mode = fs::read_to_string(out.join("per_mode.csv")).unwrap();
    assert_eq!(per_mode.lines().next(), Some("k,n,l,mean_sv"));
    assert_eq!(per_mode.lines().count(), 5);
    let traj = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert_eq!(traj.lines().next(), Some("modes_kept,certified_d,w"));
    assert_eq!(traj.lines().count(), 4);
    assert_eq!(
        fs::read_to_string(out.join("pairs.csv"))
            .unwrap()
            .lines()
            .count(),
        7
    );
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(
        report["subset_trajectory"],
        serde_json::json!([[4, 2], [3, 3], [2, 2]])
    );
}

#[test]
fn verify_passes_at_small_dimension() {
    let out: Value = serde_json::from_slice(
        &ok(&["verify", "--dim", "3", "--iters", "300", "--seed", "1"]).stdout,
    )
    .unwrap();
    assert_eq!(out["ok"], true);
    assert_eq!(out["checks"].as_array().unwrap().len(), 3);
}

#[test]
fn config_file_fills_unset_flags() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "cfg.json");
    fs::write(
        &cfg,
        r#"{"amplitudes": "0.5,0.07,0.01,0.01", "flux": 1000, "expectation": true}"#,
    )
    .unwrap();
    let low = ok(&["simulate", "--config", s(&cfg)]).stdout;
    let high = ok(&["simulate", "--config", s(&cfg), "--flux", "2000"]).stdout;
    let total = |bytes: &[u8]| -> f64 {
        String::from_utf8_lossy(bytes)
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum()
    };
    assert!((total(&high) / total(&low) - 2.0).abs() < 1e-12);

    fs::write(&cfg, r#"{"fluxx": 1}"#).unwrap();
    assert_eq!(code(&["simulate", "--config", s(&cfg)]), 2);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    // Missing seed for sampled counts.
    assert_eq!(
        code(&["simulate", "--amplitudes", EXAMPLE, "--flux", "1e6"]),
        2
    );
    // Nonexistent input.
    assert_eq!(code(&["certify", "--input", s(&path(&dir, "none.csv"))]), 2);
    // Bad header.
    let bad = path(&dir, "bad.csv");
    fs::write(&bad, "a,b\n1,2\n").unwrap();
    assert_eq!(code(&["certify", "--input", s(&bad)]), 3);
    // Incomplete dataset names the missing setting.
    let data = simulate_example(&dir, "ex.csv", &["--expectation"]);
    let text = fs::read_to_string(&data).unwrap();
    let trimmed: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with("0,2,0,3,y,"))
        .collect();
    let partial = path(&dir, "partial.csv");
    fs::write(&partial, trimmed.join("\n") + "\n").unwrap();
    let out = run(&["certify", "--input", s(&partial)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("y"), "{err}");
    // Dense work above the capacity.
    assert_eq!(
        code(&["verify", "--dim", "9", "--seed", "1", "--iters", "1"]),
        4
    );
}

use std::path::Path;
use std::process::{Command, Output};

fn fracdd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracdd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) -> String {
    std::fs::write(path, text).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn solve_prints_a_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir.path().join("c.json"),
        r#"{"n": 16, "m": 4, "probes": 2}"#,
    );
    let out = fracdd(&["solve", "--config", &cfg]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let row: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(row["h"], 0.125);
    assert_eq!(row["H"], 0.5);
    assert_eq!(row["converged"], true);
    assert_eq!(row["measure"], "axes4");
    assert_eq!(row["stop_reason"], "converged");
    assert!(row["iterations"].as_u64().unwrap() > 1);
    assert!(row["l2_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_with_cache_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir.path().join("c.json"),
        r#"{"n": 16, "m": 4, "probes": 0}"#,
    );
    let cache = dir.path().join("op.fsym");
    let out_path = dir.path().join("row.json");
    let args = [
        "solve",
        "--config",
        &cfg,
        "--cache",
        cache.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ];
    assert_eq!(fracdd(&args).status.code(), Some(0));
    assert!(cache.exists());
    let first: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(fracdd(&args).status.code(), Some(0));
    let second: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(first["iterations"], second["iterations"]);
    assert_eq!(first["l2_error"], second["l2_error"]);
}

#[test]
fn assemble_writes_symbol_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.fsym");
    let out = fracdd(&[
        "assemble",
        "--n",
        "8",
        "--measure",
        "uniform:8",
        "--c",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..4], b"FSYM");

    let bad = fracdd(&[
        "assemble",
        "--n",
        "8",
        "--measure",
        "uniform:7",
        "--out",
        "x",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn bench_on_a_user_grid() {
    let dir = tempfile::tempdir().unwrap();
    let grid = write(
        &dir.path().join("g.json"),
        r#"[{"n": 16, "m": 4, "overlap_cells": 1}, {"n": 32, "m": 4, "overlap_cells": 2}]"#,
    );
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    for (path, jobs) in [(&csv_a, "1"), (&csv_b, "2")] {
        let out = fracdd(&[
            "bench",
            "--table",
            "2",
            "--grid",
            &grid,
            "--jobs",
            jobs,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8_lossy(&out.stdout).contains("spread"));
    }
    let strip = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| {
                l.rsplit_once(',')
                    .map(|(a, _)| a.to_string())
                    .unwrap_or_default()
            })
            .collect()
    };
    let a = strip(&csv_a);
    assert_eq!(a.len(), 3);
    assert_eq!(a[0], "h,H,delta,iters,cond_est,l2_error");
    // example 2 has no closed-form solution
    assert!(a[1].ends_with(','));
    assert_eq!(a, strip(&csv_b));

    let empty = write(&dir.path().join("e.json"), "[]");
    let out = fracdd(&[
        "bench",
        "--table",
        "1",
        "--grid",
        &empty,
        "--out",
        csv_a.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&csv_a).unwrap().lines().count(), 1);
}

#[test]
fn cond_reports_eigenvalues() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        &dir.path().join("c.json"),
        r#"{"n": 16, "m": 4, "overlap_cells": 2}"#,
    );
    let out = fracdd(&["cond", "--config", &cfg, "--probes", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let (lo, hi) = (
        v["lambda_min"].as_f64().unwrap(),
        v["lambda_max"].as_f64().unwrap(),
    );
    assert!(lo > 0.0 && hi > lo);
    assert!((v["cond_est"].as_f64().unwrap() - hi / lo).abs() < 1e-12 * hi / lo);
    assert_eq!(v["probes"], 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(&dir.path().join("bad.json"), r#"{"n": 16, "m": 5}"#);
    assert_eq!(fracdd(&["solve", "--config", &bad]).status.code(), Some(2));

    let unknown = write(
        &dir.path().join("u.json"),
        r#"{"n": 16, "m": 4, "extra": 1}"#,
    );
    assert_eq!(
        fracdd(&["solve", "--config", &unknown]).status.code(),
        Some(2)
    );

    let missing = dir.path().join("missing.json");
    assert_eq!(
        fracdd(&["solve", "--config", missing.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );

    let short = write(
        &dir.path().join("s.json"),
        r#"{"n": 16, "m": 4, "probes": 0, "solver": {"max_iter": 2}}"#,
    );
    let out = fracdd(&["solve", "--config", &short]);
    assert_eq!(out.status.code(), Some(4));
    let row: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(row["stop_reason"], "max_iterations");

    assert_eq!(
        fracdd(&["bench", "--table", "3", "--out", "x.csv"])
            .status
            .code(),
        Some(2)
    );
}

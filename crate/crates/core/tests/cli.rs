use std::path::Path;
use std::process::Command;

use rpi_core::experiment::*;
use rpi_core::mdp::NamedLayout;
use rpi_core::Parallelism;

fn rpi() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rpi"))
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn chain_command_writes_per_state_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let status = rpi()
        .args(["chain", "--k", "5", "--runs", "2", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    for run in 0..2 {
        let run_dir = dir.path().join(format!("run_{run}"));
        let values = read_csv(&run_dir.join("value_function_iter_1.csv"));
        let policy = read_csv(&run_dir.join("policy_iter_1.csv"));
        assert_eq!(values.len(), 50);
        assert_eq!(policy.len(), 50);
        for (s, row) in values.iter().enumerate() {
            assert_eq!(row[0], (s + 1).to_string());
            assert!(row[1].parse::<f64>().unwrap().is_finite());
        }
    }
    let summary = read_csv(&dir.path().join("summary.csv"));
    assert_eq!(summary.len(), 3);
    assert_eq!(summary[2][0], "mean");
}

#[test]
fn summary_mean_row_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        k: Some(5),
        runs: 4,
        seed: 9,
        out: Some(dir.path().to_path_buf()),
        ..ExperimentConfig::default()
    };
    let report = run_chain_experiment(&cfg).unwrap();
    let rows = read_csv(&dir.path().join("summary.csv"));
    let errors: Vec<f64> = rows[..4].iter().map(|r| r[3].parse().unwrap()).collect();
    let iters: Vec<f64> = rows[..4].iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(rows[4][3].parse::<f64>().unwrap(), errors.iter().sum::<f64>() / 4.0);
    assert_eq!(rows[4][2].parse::<f64>().unwrap(), iters.iter().sum::<f64>() / 4.0);
    assert_eq!(report.mean_errors, errors.iter().sum::<f64>() / 4.0);
    let seeds: Vec<&str> = rows[..4].iter().map(|r| r[1].as_str()).collect();
    assert_eq!(seeds, ["9", "10", "11", "12"]);
}

#[test]
fn gridworld_outputs_cover_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        runs: 1,
        out: Some(dir.path().to_path_buf()),
        ..ExperimentConfig::for_env(Environment::Grid(NamedLayout::TwoRoom))
    };
    let report = run_gridworld_experiment(&cfg).unwrap();
    let grid = read_csv(&dir.path().join("run_0").join("value_approx.csv"));
    assert_eq!(grid.len(), 10);
    assert!(grid.iter().all(|r| r.len() == 10));
    let pgm = std::fs::read(dir.path().join("value_exact.pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n10 10\n255\n"));
    assert_eq!(pgm.len(), b"P5\n10 10\n255\n".len() + 100);
    let rho = report.runs[0].pearson.unwrap();
    assert!((-1.0..=1.0).contains(&rho));
}

#[test]
fn sequential_and_parallel_reports_agree() {
    let base = ExperimentConfig {
        k: Some(10),
        runs: 3,
        ..ExperimentConfig::default()
    };
    let par = run_chain_experiment(&base).unwrap();
    let seq = run_chain_experiment(&ExperimentConfig {
        parallelism: Parallelism::Sequential,
        ..base
    })
    .unwrap();
    assert_eq!(par.runs, seq.runs);
    assert_eq!(par.traces, seq.traces);
}

#[test]
fn basis_command_writes_graph_and_eigenfunctions() {
    let dir = tempfile::tempdir().unwrap();
    let status = rpi()
        .args(["basis", "--env", "two-room", "--k", "3", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let edges = std::fs::read_to_string(dir.path().join("graph.txt")).unwrap();
    assert!(edges.lines().all(|l| l.split_whitespace().count() == 2));
    for j in 1..=3 {
        assert!(dir.path().join(format!("eigenfunction_{j}.csv")).exists());
    }
    assert_eq!(read_csv(&dir.path().join("basis.csv")).len(), 100);
}

#[test]
fn config_file_is_honoured_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    std::fs::write(&config, r#"{"k": 5, "runs": 3, "seed": 4}"#).unwrap();
    let out = dir.path().join("out");
    let status = rpi()
        .args(["chain", "--runs", "2", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let rows = read_csv(&out.join("summary.csv"));
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0][1], "4");
    assert_eq!(rows[0][7], "5");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(rpi().args(["chain", "--gamma", "1.5"]).status().unwrap().code(), Some(1));
    assert_eq!(rpi().args(["chain", "--bogus"]).status().unwrap().code(), Some(1));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"unknown_field": 1}"#).unwrap();
    assert_eq!(rpi().args(["chain", "--config"]).arg(&bad).status().unwrap().code(), Some(1));
    let missing = dir.path().join("missing.json");
    assert_eq!(rpi().args(["chain", "--config"]).arg(&missing).status().unwrap().code(), Some(2));
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let code = rpi().args(["chain", "--runs", "1", "--out"]).arg(blocker.join("sub")).status().unwrap().code();
    assert_eq!(code, Some(2));
    assert_eq!(rpi().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn table1_writes_all_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        runs: 1,
        out: Some(dir.path().to_path_buf()),
        ..ExperimentConfig::default()
    };
    let rows = table1(&cfg).unwrap();
    assert_eq!(rows.len(), TABLE1_ROWS.len());
    let csv_rows = read_csv(&dir.path().join("table1.csv"));
    assert_eq!(csv_rows.len(), 9);
    assert_eq!(csv_rows[0][0], "RPI (5)");
}

//! CLI acceptance: determinism of reports under identical config + seed
//! (verified by double-run byte comparison), exit-code contract, and the
//! documented command behaviors.

use std::path::Path;
use std::process::{Command, Output};

fn entrolab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entrolab"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

const TWO_POINT: &str = r#"{
  "space": {"builder": "interval", "n": 2, "length": 2.0},
  "marginals": [{"values": [0.8, 0.2]}, {"values": [0.3, 0.7]}],
  "eps": 1.0,
  "K": 16,
  "seed": 1
}"#;

const UNIFORM: &str = r#"{
  "space": {"builder": "circle", "n": 16, "length": 1.0},
  "marginals": [{"profile": "uniform"}, {"profile": "uniform"}],
  "eps": 0.5,
  "seed": 1
}"#;

#[test]
fn double_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "problem.json", TWO_POINT);
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");

    for (cmd, file) in [
        (vec!["solve"], "solution.json"),
        (vec!["interpolate", "--K", "8"], "interpolation.csv"),
        (vec!["verify", "--tier", "a"], "report.json"),
    ] {
        let mut args_a: Vec<&str> = cmd.clone();
        args_a.extend(["--config", &config, "--out", out_a.to_str().unwrap()]);
        let mut args_b: Vec<&str> = cmd.clone();
        args_b.extend(["--config", &config, "--out", out_b.to_str().unwrap()]);
        let run_a = entrolab(&args_a, dir.path());
        let run_b = entrolab(&args_b, dir.path());
        assert!(run_a.status.success(), "{cmd:?}: {:?}", run_a);
        assert_eq!(run_a.stdout, run_b.stdout, "{cmd:?} stdout differs");
        let bytes_a = std::fs::read(out_a.join(file)).unwrap();
        let bytes_b = std::fs::read(out_b.join(file)).unwrap();
        let identical = bytes_a == bytes_b;
        println!(
            "{} determinism ({file}): {}",
            cmd[0],
            if identical { "PASS" } else { "FAIL" }
        );
        assert!(identical, "{cmd:?} output file differs between runs");
    }
}

#[test]
fn sweep_is_deterministic_and_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(
        dir.path(),
        "sweep.json",
        r#"{
          "space": {"builder": "interval", "n": 200, "length": 1.0},
          "marginals": [
            {"profile": "gaussian", "center": 0.3, "scale": 0.02},
            {"profile": "gaussian", "center": 0.7, "scale": 0.02}
          ],
          "eps": 0.2,
          "tol": 1e-10,
          "seed": 3,
          "sweep": {"eps_list": [0.4, 0.2, 0.1], "n": 200}
        }"#,
    );
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let run_a = entrolab(
        &["sweep", "--config", &config, "--out", out_a.to_str().unwrap()],
        dir.path(),
    );
    assert!(run_a.status.success(), "{run_a:?}");
    let run_b = entrolab(
        &["sweep", "--config", &config, "--out", out_b.to_str().unwrap()],
        dir.path(),
    );
    assert!(run_b.status.success());
    let csv_a = std::fs::read_to_string(out_a.join("sweep.csv")).unwrap();
    let csv_b = std::fs::read_to_string(out_b.join("sweep.csv")).unwrap();
    println!(
        "sweep determinism: {}",
        if csv_a == csv_b { "PASS" } else { "FAIL" }
    );
    assert_eq!(csv_a, csv_b);
    let lines: Vec<&str> = csv_a.lines().collect();
    assert_eq!(lines[0], "eps,n,cost,w2sq_half,gap");
    let gaps: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(4).unwrap().parse().unwrap())
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] < w[0]), "gaps not decreasing: {gaps:?}");
}

#[test]
fn verify_tier_a_passes_and_reports_every_check_once() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "problem.json", TWO_POINT);
    let out = dir.path().join("out");
    let run = entrolab(
        &["verify", "--config", &config, "--tier", "a", "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(run.status.success(), "verify failed: {run:?}");
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.contains("PASS tier-A"), "{stdout}");
    assert!(!stdout.contains("tier-B"), "--tier a must not run tier B");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let names: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    let mut deduped = names.clone();
    deduped.sort_unstable();
    deduped.dedup();
    assert_eq!(deduped.len(), names.len(), "duplicate check names: {names:?}");
    assert!(report["all_passed"].as_bool().unwrap());
}

#[test]
fn uniform_marginals_print_zero_cost() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "uniform.json", UNIFORM);
    let run = entrolab(
        &["solve", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()],
        dir.path(),
    );
    assert!(run.status.success());
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.starts_with("cost="), "{stdout}");
    let cost: f64 = stdout
        .split_whitespace()
        .next()
        .unwrap()
        .strip_prefix("cost=")
        .unwrap()
        .parse()
        .unwrap();
    assert!(cost.abs() < 1e-10, "uniform-marginal cost {cost}");
}

#[test]
fn solve_cost_matches_the_scan_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "problem.json", TWO_POINT);
    let run = entrolab(
        &["solve", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()],
        dir.path(),
    );
    assert!(run.status.success());
    let stdout = String::from_utf8(run.stdout).unwrap();
    let cost: f64 = stdout
        .split_whitespace()
        .next()
        .unwrap()
        .strip_prefix("cost=")
        .unwrap()
        .parse()
        .unwrap();
    let space = entrolab_core::Space::interval_grid(2, 2.0).unwrap();
    let rho0 =
        entrolab_core::Density::normalized(&space, ndarray::array![0.8, 0.2]).unwrap();
    let rho1 =
        entrolab_core::Density::normalized(&space, ndarray::array![0.3, 0.7]).unwrap();
    let oracle = entrolab_core::oracle::two_point_cost_scan(&space, &rho0, &rho1, 1.0).unwrap();
    assert!((cost - oracle).abs() < 1e-6, "cli {cost} vs scan {oracle}");
}

#[test]
fn exit_codes_follow_the_contract() {
    let dir = tempfile::tempdir().unwrap();

    // Missing eps: exit 1, message names the field.
    let broken = write(
        dir.path(),
        "broken.json",
        r#"{"space": {"builder": "circle", "n": 8, "length": 1.0},
            "marginals": [{"profile": "uniform"}, {"profile": "uniform"}]}"#,
    );
    let run = entrolab(&["solve", "--config", &broken], dir.path());
    assert_eq!(run.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&run.stderr).contains("eps"));

    // Unknown flag: usage error, exit 1.
    let run = entrolab(&["solve", "--nonsense"], dir.path());
    assert_eq!(run.status.code(), Some(1));

    // Sweep pairing violation: exit 1 with the pairing-rule message.
    let bad_pairing = write(
        dir.path(),
        "pairing.json",
        r#"{
          "space": {"builder": "interval", "n": 50, "length": 1.0},
          "marginals": [
            {"profile": "gaussian", "center": 0.3, "scale": 0.02},
            {"profile": "gaussian", "center": 0.7, "scale": 0.02}
          ],
          "eps": 0.2,
          "sweep": {"eps_list": [0.05], "n": 50}
        }"#,
    );
    let run = entrolab(&["sweep", "--config", &bad_pairing], dir.path());
    assert_eq!(run.status.code(), Some(1), "{run:?}");
    assert!(String::from_utf8_lossy(&run.stderr).contains("eps >= 10*h"));

    // Numerical failure (iteration cap): exit 2.
    let hard = write(
        dir.path(),
        "hard.json",
        r#"{
          "space": {"builder": "interval", "n": 2, "length": 2.0},
          "marginals": [{"values": [0.8, 0.2]}, {"values": [0.3, 0.7]}],
          "eps": 1.0,
          "max_iter": 1,
          "tol": 1e-15
        }"#,
    );
    let run = entrolab(&["solve", "--config", &hard], dir.path());
    assert_eq!(run.status.code(), Some(2), "{run:?}");

    // Zero marginal entry: config-level problem, exit 1, mentions the floor.
    let zero = write(
        dir.path(),
        "zero.json",
        r#"{
          "space": {"builder": "interval", "n": 2, "length": 2.0},
          "marginals": [{"values": [1.0, 0.0]}, {"values": [0.3, 0.7]}],
          "eps": 1.0
        }"#,
    );
    let run = entrolab(&["solve", "--config", &zero], dir.path());
    assert_eq!(run.status.code(), Some(1), "{run:?}");
    assert!(String::from_utf8_lossy(&run.stderr).contains("floor"));

    // The same config solves once the floor is applied.
    let run = entrolab(
        &["solve", "--config", &zero, "--floor", "0.01",
          "--out", dir.path().join("o").to_str().unwrap()],
        dir.path(),
    );
    assert_eq!(run.status.code(), Some(0), "{run:?}");
}

#[test]
fn interpolate_row_count_and_minimal_grid() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "problem.json", TWO_POINT);
    let out = dir.path().join("o");
    let run = entrolab(
        &["interpolate", "--config", &config, "--K", "2",
          "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(run.status.success(), "K=2 must be accepted: {run:?}");
    let csv = std::fs::read_to_string(out.join("interpolation.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,index,rho,phi,psi,theta");
    assert_eq!(lines.len(), 1 + 3 * 2, "one row per (t, point)");

    // Uniform marginals: theta column all zeros.
    let uniform = write(dir.path(), "uniform.json", UNIFORM);
    let run = entrolab(
        &["interpolate", "--config", &uniform, "--K", "4",
          "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(run.status.success());
    let csv = std::fs::read_to_string(out.join("interpolation.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let theta: f64 = line.split(',').nth(5).unwrap().parse().unwrap();
        assert!(theta.abs() < 1e-12, "{line}");
    }
}

#[test]
fn graph_config_with_edge_list_file_solves() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "triangle.txt",
        "# unit triangle\nweights 1.0 1.0 1.0\n0 1 1.0\n1 2 1.0\n0 2 1.0\n",
    );
    let config = write(
        dir.path(),
        "graph.json",
        r#"{
          "space": {"builder": "graph", "path": "triangle.txt"},
          "marginals": [{"values": [0.6, 0.2, 0.2]}, {"values": [0.2, 0.2, 0.6]}],
          "eps": 0.5
        }"#,
    );
    let run = entrolab(
        &["solve", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()],
        dir.path(),
    );
    assert!(run.status.success(), "{run:?}");
}

use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dubins3d")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const SEVEN_PATH_GOAL: [&str; 9] = ["--x", "2.64101", "-1.78042", "-0.371051", "--v", "-0.323321", "0.729589", "0.602631", "--r=1"];

#[test]
fn solve_reports_seven_paths() {
    let mut args = vec!["solve"];
    args.extend(SEVEN_PATH_GOAL);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "discrete");
    let sols = v["solutions"].as_array().unwrap();
    assert_eq!(sols.len(), 7);
    for s in sols {
        for key in ["phi1", "psi1", "d", "phi2", "psi2", "length", "fk_residual"] {
            assert!(s[key].is_f64(), "{key}");
        }
        assert!(s["fk_residual"].as_f64().unwrap() < 1e-6);
    }
    assert!(v["wall_ms"].as_f64().unwrap() >= 0.0);
    assert!(v["diagnostics"].is_object());
}

#[test]
fn aligned_goal_reports_a_family() {
    let o = run(&["solve", "--x", "0", "0", "3", "--v", "0", "0", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "infinite_family");
    assert!(v["family"].is_object());
}

#[test]
fn start_pose_is_invalid() {
    let o = run(&["solve", "--x", "0", "0", "0", "--v", "0", "0", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
}

#[test]
fn zero_heading_is_invalid() {
    let o = run(&["solve", "--x", "1", "0", "0", "--v", "0", "0", "0"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(run(&["solve", "--bogus"]).status.code(), Some(64));
    assert_eq!(run(&["solve", "--x", "1", "2"]).status.code(), Some(64));
    assert_eq!(run(&["solve", "--x", "1", "2", "3"]).status.code(), Some(64));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn json_input_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("goal.json");
    std::fs::write(&input, r#"{"x":[2.64101,-1.78042,-0.371051],"v":[-0.323321,0.729589,0.602631],"r":1.0}"#).unwrap();
    let o = run(&["solve", "--json-in", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let from_file: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let mut args = vec!["solve"];
    args.extend(SEVEN_PATH_GOAL);
    let from_flags: Value = serde_json::from_str(&stdout(&run(&args))).unwrap();
    assert_eq!(from_file["solutions"], from_flags["solutions"]);

    let missing = dir.path().join("absent.json");
    assert_eq!(run(&["solve", "--json-in", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn sample_is_deterministic_across_threads() {
    let a = run(&["sample", "--n", "60", "--seed", "5", "--threads", "1"]);
    let b = run(&["sample", "--n", "60", "--seed", "5", "--threads", "3"]);
    let c = run(&["sample", "--n", "60", "--seed", "5", "--threads", "3"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(b.stdout, c.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("solution_count,frequency,percent\n"));
    let total: u64 = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 60);
    let summary: Value = serde_json::from_slice(&a.stderr).unwrap();
    assert_eq!(summary["n"], 60);
    assert!(summary["min_count"].as_u64().unwrap() <= summary["max_count"].as_u64().unwrap());
}

#[test]
fn sample_summary_records_seed() {
    let a = run(&["sample", "--n", "60", "--seed", "5"]);
    let b = run(&["sample", "--n", "60", "--seed", "6"]);
    let sa: Value = serde_json::from_slice(&a.stderr).unwrap();
    let sb: Value = serde_json::from_slice(&b.stderr).unwrap();
    assert_eq!(sa["seed"], 5);
    assert_eq!(sb["seed"], 6);
}

#[test]
fn export_ends_at_the_goal() {
    let mut args = vec!["export", "--samples-per-path", "25"];
    args.extend(SEVEN_PATH_GOAL);
    let o = run(&args);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("solution_index,t,x,y,z"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|f| f.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 7 * 25);
    let goal = [2.64101, -1.78042, -0.371051];
    for row in rows.iter().filter(|r| r[1] == 1.0) {
        for k in 0..3 {
            assert!((row[2 + k] - goal[k]).abs() < 1e-6, "{row:?}");
        }
    }
    for row in rows.iter().filter(|r| r[1] == 0.0) {
        assert!(row[2..].iter().all(|c| c.abs() < 1e-12));
    }
}

#[test]
fn export_rejects_single_sample() {
    let mut args = vec!["export", "--samples-per-path", "1"];
    args.extend(SEVEN_PATH_GOAL);
    assert_eq!(run(&args).status.code(), Some(64));
}

#[test]
fn slice_cell_matches_solve() {
    let o = run(&["slice", "--preset", "fig1b", "--xmin", "1.5", "--xmax", "1.5", "--zmin", "-2", "--zmax", "-2", "--steps", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(lines.next(), Some("x,z,n_solutions,shortest_length"));
    let cell: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!(lines.next().is_none());

    let s = run(&["solve", "--x", "1.5", "0.5", "-2", "--v", "0.5", "1", "0"]);
    let v: Value = serde_json::from_str(&stdout(&s)).unwrap();
    let sols = v["solutions"].as_array().unwrap();
    assert_eq!(cell[2].parse::<usize>().unwrap(), sols.len());
    let shortest: f64 = cell[3].parse().unwrap();
    assert!((shortest - sols[0]["length"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn slice_scans_rows_in_documented_order() {
    let o = run(&["slice", "--preset", "fig1a", "--steps", "3", "--threads", "2"]);
    let text = stdout(&o);
    let cells: Vec<(f64, f64)> = text
        .lines()
        .skip(2)
        .map(|l| {
            let f: Vec<f64> = l.split(',').take(2).map(|v| v.parse().unwrap()).collect();
            (f[0], f[1])
        })
        .collect();
    let expected: Vec<(f64, f64)> =
        [-4.0, 0.0, 4.0].iter().flat_map(|&z| [-4.0, 0.0, 4.0].map(|x| (x, z))).collect();
    assert_eq!(cells, expected);
}

#[test]
fn slice_needs_a_heading() {
    assert_eq!(run(&["slice", "--y", "0.5"]).status.code(), Some(64));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bench.json");
    let o = run(&["bench", "--n", "5", "--seed", "3", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["n"], 5);
    let (min, med, p95, max) = (v["min_ms"].as_f64().unwrap(), v["median_ms"].as_f64().unwrap(), v["p95_ms"].as_f64().unwrap(), v["max_ms"].as_f64().unwrap());
    assert!(min <= med && med <= p95 && p95 <= max);
}

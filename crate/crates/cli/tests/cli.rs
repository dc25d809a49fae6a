use std::fs;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_schurdyn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("valid json")
}

#[test]
fn kernel_table_ten_by_ten() {
    let out = run(&["kernel", "--alpha", "2", "--xi", "0.5", "--grid", "1..10"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,value,est_tail");
    assert_eq!(lines.len(), 101);
    // symmetric kernel
    let value = |x: usize, y: usize| -> f64 {
        let row = lines[1 + (x - 1) * 10 + (y - 1)];
        row.split(',').nth(2).unwrap().parse().unwrap()
    };
    for x in 1..=10 {
        for y in 1..=10 {
            assert_eq!(value(x, y), value(y, x));
        }
    }
    assert!(value(1, 1) > value(10, 10));
}

#[test]
fn kernel_table_json_matches_csv() {
    let base = ["kernel", "--alpha", "1.5", "--xi", "0.3", "--grid", "2,4"];
    let csv = stdout(&run(&base));
    let mut args = base.to_vec();
    args.extend(["--format", "json"]);
    let doc = json(&run(&args));
    assert_eq!(doc["kind"], "det_static");
    let entries = doc["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 4);
    for (entry, row) in entries.iter().zip(csv.lines().skip(1)) {
        let v: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!((entry["value"].as_f64().unwrap() - v).abs() <= 4.0 * f64::EPSILON * v.abs());
    }
}

#[test]
fn plancherel_table() {
    let out = run(&["kernel", "--theta", "2", "--grid", "1..4", "--format", "json"]);
    assert!(out.status.success());
    let doc = json(&out);
    assert_eq!(doc["kind"], "det_plancherel");
    assert_eq!(doc["entries"].as_array().unwrap().len(), 16);
    assert_eq!(doc["params"]["theta"].as_f64().unwrap(), 2.0);
}

#[test]
fn empty_grid_is_a_usage_error() {
    let out = run(&["kernel", "--alpha", "2", "--xi", "0.5", "--grid", ""]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["kernel", "--alpha", "2", "--xi", "0.5", "--grid", "5..3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_parameters_are_usage_errors() {
    assert_eq!(run(&["kernel", "--alpha", "2", "--xi", "1.5", "--grid", "1"]).status.code(), Some(2));
    assert_eq!(run(&["kernel", "--alpha", "2", "--grid", "1"]).status.code(), Some(2));
    assert_eq!(run(&["kernel", "--alpha", "2", "--xi", "0.5", "--grid", "0..2"]).status.code(), Some(2));
}

#[test]
fn malformed_points_are_usage_errors() {
    for bad in ["0:x", "a:1", "1:2:3", "0:0", "-1:2", ""] {
        let out = run(&["correlate", "--alpha", "2", "--xi", "0.5", "--points", bad]);
        assert_eq!(out.status.code(), Some(2), "points {bad:?}");
    }
    let out = run(&["correlate", "--alpha", "2", "--xi", "0.5", "--points", "3,3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn static_correlation_agrees_across_methods() {
    let out = run(&["correlate", "--alpha", "2", "--xi", "0.5", "--points", "1,3"]);
    assert!(out.status.success());
    let doc = json(&out);
    let pf = doc["pfaffian_value"].as_f64().unwrap();
    let det = doc["determinant_value"].as_f64().unwrap();
    let oracle = doc["oracle_value"].as_f64().unwrap();
    let err = doc["oracle_error"].as_f64().unwrap();
    assert!((pf - det).abs() < 1e-12 * pf.abs().max(1e-300) + 1e-15);
    assert!((pf - oracle).abs() <= err + 1e-12);
}

#[test]
fn two_time_correlation_omits_determinant() {
    let out = run(&["correlate", "--alpha", "2", "--xi", "0.5", "--points", "0:1,1:2"]);
    assert!(out.status.success());
    let doc = json(&out);
    assert!(doc.get("determinant_value").is_none());
    let pf = doc["pfaffian_value"].as_f64().unwrap();
    let oracle = doc["oracle_value"].as_f64().unwrap();
    assert!((pf - oracle).abs() <= doc["oracle_error"].as_f64().unwrap() + 1e-10);
}

#[test]
fn verify_single_family() {
    let out = run(&["verify", "--only", "coherency"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["passed"], true);
    let criteria = doc["criteria"].as_array().unwrap();
    assert_eq!(criteria.len(), 1);
    assert_eq!(criteria[0]["family"], "coherency");
}

#[test]
fn verify_unknown_family() {
    assert_eq!(run(&["verify", "--only", "nonsense"]).status.code(), Some(2));
}

#[test]
fn zero_horizon_simulation_has_one_event() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().to_str().unwrap();
    let out = run(&[
        "simulate", "--alpha", "2", "--xi", "0.5", "--trajectories", "1", "--horizon", "0", "--output-dir", path,
    ]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("trajectory_000000.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["events"], 1);
}

#[test]
fn zero_trajectories_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--alpha",
        "2",
        "--xi",
        "0.5",
        "--trajectories",
        "0",
        "--horizon",
        "1",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fixed_seed_output_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = run(&[
            "simulate",
            "--alpha",
            "2",
            "--xi",
            "0.5",
            "--trajectories",
            "4",
            "--horizon",
            "2",
            "--seed",
            "99",
            "--output-dir",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    for name in ["trajectory_000000.csv", "trajectory_000003.csv", "summary.json"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
    }
    let args = ["correlate", "--alpha", "2", "--xi", "0.5", "--points", "0:1,0.5:1", "--trajectories", "500", "--seed", "7"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn output_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.csv");
    let out = run(&["kernel", "--alpha", "2", "--xi", "0.5", "--grid", "1,2", "--output", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    assert!(fs::read_to_string(path).unwrap().starts_with("x,y,value"));
}

#[test]
fn simulated_occupancy_matches_density() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--alpha",
        "2",
        "--xi",
        "0.5",
        "--trajectories",
        "4000",
        "--horizon",
        "3",
        "--max-point",
        "1",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let occ = &summary["occupancy"][0];
    let (mean, se) = (occ["occupancy"].as_f64().unwrap(), occ["std_error"].as_f64().unwrap());
    let table = stdout(&run(&["kernel", "--alpha", "2", "--xi", "0.5", "--grid", "1"]));
    let rho: f64 = table.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((mean - rho).abs() <= 4.0 * se, "{mean} ± {se} vs {rho}");
}
